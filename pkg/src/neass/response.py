"""Transport observables and the verification experiments built on them.

The Hall conductivity is evaluated as the Chern marker of the Fermi
projection,

    sigma_H = i tau( P [[P, X], [P, Y]] ),

a purely equilibrium quantity; 2*pi*sigma_H is an integer.  An independent
lattice-gauge oracle (plaquette link variables over occupied-frame overlap
determinants) produces that integer exactly and pins the quantization checks.
The central experiment drives a model with the almost-stationary state of
order n and fits the power law of the excess current
|tau(J Pi_n(eps)) - eps*sigma_H| ~ eps^{n+1} over a logarithmic sweep.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .construction import GeneratorSequence, assemble_neass, build_generators, position_offdiag
from .errors import GapClosed, NotUnitary, OracleInconclusive
from .fiber import (
    FiberOperator,
    ProjectionField,
    _dagger,
    commutator,
    commutator_with_position,
    identity_field,
    sup_fiber_norm,
    trace_per_unit_volume,
)
from .lattice import KGrid, _axis_index
from .models import GAP_TOL, HoppingModel, analytic_velocity, build_hamiltonian, fermi_projection

NOISE_FLOOR = 1e-13


# -- equilibrium invariants -----------------------------------------------------


def hall_conductivity(p0: ProjectionField) -> float:
    """sigma_H = i tau(P [[P,X],[P,Y]]); real up to roundoff, and 2*pi*sigma_H
    is an integer up to quadrature error."""
    cx = commutator_with_position(p0.op, "x")
    cy = commutator_with_position(p0.op, "y")
    val = 1j * trace_per_unit_volume(p0.op @ commutator(cx, cy))
    return float(val.real)


def chern_marker(p: ProjectionField) -> complex:
    """tau([P X P, P Y P]) evaluated through the periodic identity
    [PXP, PYP] = P[[P,X],[P,Y]]P; equals -i * sigma_H for the Fermi
    projection, and is invariant under smooth unitary conjugation of P."""
    cx = commutator_with_position(p.op, "x")
    cy = commutator_with_position(p.op, "y")
    return trace_per_unit_volume(p.op @ commutator(cx, cy) @ p.op)


def chern_number_fhs(p0: ProjectionField, det_tol: float = 1e-10) -> int:
    """Integer Chern number of the occupied frame, by plaquette link
    variables (Fukui-Hatsugai-Suzuki construction).

    Overlap determinants between occupied frames at neighbouring nodes give
    U(1) links; the sum of plaquette phases is 2*pi times an exact integer.
    Orientation is fixed so the result equals 2*pi*hall_conductivity for the
    same projection.  Gauge-invariant: eigenvector phase conventions cancel
    around every plaquette.
    """
    w, v = np.linalg.eigh(p0.op.data)
    frames = v[..., -p0.rank:]  # eigenvalues ~1 sort last
    bra = _dagger(frames)

    def link(shift_axis):
        ket = np.roll(frames, -1, axis=shift_axis)
        det = np.linalg.det(bra @ ket)
        small = np.abs(det).min()
        if small < det_tol:
            raise OracleInconclusive(
                f"overlap determinant collapsed to {small:.3e}; refine the grid"
            )
        return det / np.abs(det)

    u1 = link(0)
    u2 = link(1)
    plaquette = u1 * np.roll(u2, -1, axis=0) * np.conj(np.roll(u1, -1, axis=1)) * np.conj(u2)
    total = float(np.angle(plaquette).sum() / (2.0 * np.pi))
    # counterclockwise in reduced coordinates; orient by the lattice handedness
    total *= np.sign(p0.grid.lattice.det)
    nearest = round(total)
    if abs(total - nearest) > 1e-4:
        raise OracleInconclusive(
            f"plaquette sum {total:.6f} is not close to an integer; refine the grid"
        )
    return int(nearest)


def current_trace(model: HoppingModel, pi: ProjectionField) -> complex:
    """tau(J Pi) with J the analytic velocity along x; the imaginary part is
    a numerical diagnostic and should sit at roundoff level."""
    j_op = analytic_velocity(model, pi.grid, "x")
    return trace_per_unit_volume(j_op @ pi.op)


def response_current(model: HoppingModel, pi: ProjectionField) -> float:
    return float(current_trace(model, pi).real)


def commutator_trace_check(p: ProjectionField, a: FiberOperator, axis: str | int) -> float:
    """|tau([P A P, P X_axis P])|, evaluated as
    tau([PAP, X]) - tau([PAP, X^OD]); vanishes for any smooth A."""
    _axis_index(axis)
    pap = p.op @ a @ p.op
    full = trace_per_unit_volume(commutator_with_position(pap, axis))
    xod = position_offdiag(p, axis)
    blocked = trace_per_unit_volume(commutator(pap, xod))
    return abs(full - blocked)


def chern_simons_check(p: ProjectionField, u: FiberOperator, tol_unitary: float = 1e-10) -> float:
    """|chern_marker(U P U^dag) - chern_marker(P)| for a smooth unitary U.

    The marker is a conjugation invariant; this difference sitting at zero is
    what makes the driven current reproduce the equilibrium conductivity.
    """
    eye = identity_field(u.grid, u.dim)
    unitarity = sup_fiber_norm(u @ u.dagger() - eye)
    if unitarity >= tol_unitary:
        raise NotUnitary(f"max |U U^dag - 1| = {unitarity:.3e}")
    conjugated = ProjectionField(u @ p.op @ u.dagger(), rank=p.rank)
    return abs(chern_marker(conjugated) - chern_marker(p))


# -- real-space oracle -----------------------------------------------------------


def realspace_trace_oracle(model: HoppingModel, cells: int) -> float:
    """Occupied-state density from a dense L x L torus diagonalization.

    Builds the real-space Hamiltonian on a torus of cells x cells unit cells,
    counts eigenvalues below mu and returns count / (L^2 * cell_area).  For
    torus boundary conditions this equals the fiber-trace value
    tau(Pi0) = rank / cell_area exactly, because the torus samples the Bloch
    Hamiltonian on the L x L momentum grid.
    """
    if cells < 1 or cells % 2 == 0:
        raise ValueError(f"cells must be an odd positive integer, got {cells}")
    dim = model.dim
    n_sites = cells * cells * dim
    h = np.zeros((cells, cells, dim, cells, cells, dim), dtype=complex)
    for (r1, r2), mat in model.hopping_items():
        for c1 in range(cells):
            for c2 in range(cells):
                h[c1, c2, :, (c1 + r1) % cells, (c2 + r2) % cells, :] += mat
    h = h.reshape(n_sites, n_sites)
    evals = np.linalg.eigvalsh(h)
    if np.abs(evals - model.mu).min() < GAP_TOL:
        raise GapClosed(
            f"finite-torus spectrum touches mu = {model.mu} "
            f"(closest eigenvalue at distance {np.abs(evals - model.mu).min():.3e})"
        )
    occupied = int((evals < model.mu).sum())
    return occupied / (cells * cells * model.lattice.cell_area)


# -- scaling experiment ------------------------------------------------------------


@dataclass(frozen=True)
class SweepRecord:
    """One (order, epsilon) evaluation of the driven state."""

    model: str
    order: int
    epsilon: float
    current: float
    sigma_hall: float
    residual: float
    defect: float
    current_imag: float = 0.0
    below_noise_floor: bool = False


@dataclass(frozen=True)
class ScalingFit:
    """Least-squares slope of log(quantity) against log(epsilon)."""

    model: str
    order: int
    quantity: str
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    degenerate: bool = False


def fit_loglog(
    epsilons: np.ndarray,
    values: np.ndarray,
    model: str,
    order: int,
    quantity: str,
    noise_floor: float = NOISE_FLOOR,
) -> ScalingFit:
    """Fit log(values) vs log(epsilons), excluding points at the noise floor;
    fewer than 4 usable points marks the fit degenerate."""
    epsilons = np.asarray(epsilons, dtype=float)
    values = np.asarray(values, dtype=float)
    usable = values > noise_floor
    if usable.sum() < 4:
        return ScalingFit(model, order, quantity, float("nan"), float("nan"),
                          float("nan"), int(usable.sum()), degenerate=True)
    x = np.log(epsilons[usable])
    y = np.log(values[usable])
    slope, intercept = np.polyfit(x, y, 1)
    predicted = slope * x + intercept
    ss_res = float(((y - predicted) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return ScalingFit(model, order, quantity, float(slope), float(intercept),
                      float(r2), int(usable.sum()))


def default_epsilons(n_points: int = 8) -> np.ndarray:
    return np.logspace(-2.0, -0.5, n_points)


def residual_scaling_sweep(
    model: HoppingModel,
    grid: KGrid,
    n_max: int,
    epsilons=None,
    noise_floor: float = NOISE_FLOOR,
    diagonal_gauge=None,
) -> tuple[list[SweepRecord], list[ScalingFit]]:
    """Run the excess-current and stationarity-defect scaling experiment.

    Generators are built once at order n_max and truncated per order, so the
    order-n and order-(n+1) runs share the recursion prefix exactly.  Fits
    are returned for both quantities, per order.
    """
    epsilons = default_epsilons() if epsilons is None else np.asarray(epsilons, dtype=float)
    if epsilons.size < 4:
        raise ValueError("need at least 4 epsilon values for the scaling fit")
    if np.any(epsilons <= 0) or np.any(epsilons > 1):
        raise ValueError("epsilon values must lie in (0, 1]")
    h = build_hamiltonian(model, grid)
    p0, _ = fermi_projection(h, model.mu)
    sigma = hall_conductivity(p0)
    gens = build_generators(h, p0, n_max, diagonal_gauge=diagonal_gauge)
    records: list[SweepRecord] = []
    fits: list[ScalingFit] = []
    for order in range(1, n_max + 1):
        partial = gens.truncate(order)
        residuals = np.empty(epsilons.size)
        defects = np.empty(epsilons.size)
        for i, eps in enumerate(epsilons):
            state = assemble_neass(h, p0, partial, float(eps))
            tr = current_trace(model, state.pi)
            residual = abs(tr.real - eps * sigma)
            residuals[i] = residual
            defects[i] = state.defect
            records.append(
                SweepRecord(
                    model=model.name,
                    order=order,
                    epsilon=float(eps),
                    current=float(tr.real),
                    sigma_hall=sigma,
                    residual=float(residual),
                    defect=float(state.defect),
                    current_imag=float(tr.imag),
                    below_noise_floor=bool(residual < noise_floor),
                )
            )
        fits.append(fit_loglog(epsilons, residuals, model.name, order, "residual", noise_floor))
        fits.append(fit_loglog(epsilons, defects, model.name, order, "defect", noise_floor))
    return records, fits


# -- CSV emission -------------------------------------------------------------------


def write_records_csv(records: list[SweepRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "n", "epsilon", "current", "sigma_hall", "residual", "defect"])
        for rec in records:
            writer.writerow([
                rec.model, rec.order, repr(rec.epsilon), repr(rec.current),
                repr(rec.sigma_hall), repr(rec.residual), repr(rec.defect),
            ])


def write_fits_csv(fits: list[ScalingFit], path, quantity: str = "residual") -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "n", "slope", "intercept", "r2"])
        for fit in fits:
            if fit.quantity != quantity:
                continue
            writer.writerow([
                fit.model, fit.order, repr(fit.slope), repr(fit.intercept), repr(fit.r_squared),
            ])
