"""Inverting the Liouvillian L(B) = -i[H, B] on block-antidiagonal fields.

Two independent routes are provided.  The production path diagonalizes each
fiber and divides by energy differences:

    B_mn = i A_mn / (E_m - E_n)   for index pairs straddling the gap,

which is exact in finite dimension.  The validation path evaluates the
resolvent contour formula

    B = (1/2 pi) oint_C dz (H - z)^{-1} [P, A] (H - z)^{-1}

over a circle enclosing the occupied spectrum, discretized with the
trapezoidal rule (exponentially convergent on analytic integrands).  The two
must agree to high accuracy; the cross-check is wired into the self-test
suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ContourHitsSpectrum,
    GapViolation,
    NotOffDiagonal,
    SingularResolvent,
)
from .fiber import FiberOperator, ProjectionField, _dagger, off_diagonal, sup_fiber_norm

OFF_DIAGONAL_TOL = 1e-10


@dataclass(frozen=True)
class ContourSpec:
    """Circular resolvent contour: must enclose every occupied eigenvalue at
    every k, no unoccupied one, and keep a quarter-gap clearance."""

    center: complex
    radius: float
    nodes: int = 128

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("contour radius must be positive")
        if self.nodes < 4:
            raise ValueError("need at least 4 quadrature nodes")


def _spectral_data(h: FiberOperator, p: ProjectionField):
    """Eigendecomposition of H plus the occupied/unoccupied character of each
    eigenvector according to P; raises GapViolation on inconsistency."""
    w, v = np.linalg.eigh(h.data)
    chi = np.einsum("...im,...ij,...jm->...m", v.conj(), p.op.data, v).real
    if np.abs(chi * (1.0 - chi)).max() > 1e-6:
        raise GapViolation(
            "projection does not block-diagonalize H: eigenvector characters "
            f"deviate from 0/1 by up to {np.abs(chi * (1 - chi)).max():.3e}"
        )
    occ = chi > 0.5
    occ_top = w[occ].max()
    unocc_bottom = w[~occ].min()
    gap = unocc_bottom - occ_top
    if gap <= 0:
        raise GapViolation(
            f"occupied spectrum [{w[occ].min():.6g}, {occ_top:.6g}] overlaps "
            f"unoccupied spectrum starting at {unocc_bottom:.6g}"
        )
    return w, v, occ, float(gap)


def inverse_liouvillian_spectral(
    h: FiberOperator,
    p: ProjectionField,
    a: FiberOperator,
    od_tol: float = OFF_DIAGONAL_TOL,
) -> FiberOperator:
    """Unique off-diagonal solution of -i[H, B] = A, per fiber in the
    eigenbasis of H.  A must already be off-diagonal with respect to P."""
    od_defect = sup_fiber_norm(a - off_diagonal(a, p))
    if od_defect >= od_tol:
        raise NotOffDiagonal(
            f"input has block-diagonal content {od_defect:.3e} (tol {od_tol:g})"
        )
    w, v, occ, gap = _spectral_data(h, p)
    de = w[..., :, None] - w[..., None, :]
    opposite = occ[..., :, None] != occ[..., None, :]
    min_split = np.abs(de[opposite]).min()
    if min_split < gap / 2:
        raise GapViolation(
            f"eigenvalue pair across the gap split by only {min_split:.3e} "
            f"(global gap {gap:.3e})"
        )
    at = _dagger(v) @ a.data @ v
    bt = np.where(opposite, 1j * at / np.where(opposite, de, 1.0), 0.0)
    return FiberOperator(a.grid, v @ bt @ _dagger(v))


def default_contour(h: FiberOperator, p: ProjectionField, nodes: int = 128) -> ContourSpec:
    """Circle centered on the occupied spectral range, reaching half a gap
    beyond it on both sides: clears the spectrum by gap/2 everywhere."""
    w, _, occ, gap = _spectral_data(h, p)
    occ_vals = w[occ]
    center = 0.5 * (occ_vals.min() + occ_vals.max())
    radius = 0.5 * (occ_vals.max() - occ_vals.min()) + 0.5 * gap
    return ContourSpec(center=complex(center), radius=float(radius), nodes=nodes)


def inverse_liouvillian_contour(
    h: FiberOperator,
    p: ProjectionField,
    a: FiberOperator,
    contour: ContourSpec | None = None,
    od_tol: float = OFF_DIAGONAL_TOL,
) -> FiberOperator:
    """Resolvent-contour evaluation of the inverse Liouvillian.

    The circle is discretized with ``contour.nodes`` trapezoidal points:
    z_j = c + r e^{i theta_j}, weight (i r e^{i theta_j}) / nodes including
    the 1/(2 pi) prefactor.
    """
    od_defect = sup_fiber_norm(a - off_diagonal(a, p))
    if od_defect >= od_tol:
        raise NotOffDiagonal(
            f"input has block-diagonal content {od_defect:.3e} (tol {od_tol:g})"
        )
    w, _, occ, gap = _spectral_data(h, p)
    if contour is None:
        contour = default_contour(h, p)
    dist_to_circle = np.abs(np.abs(w - contour.center) - contour.radius)
    if dist_to_circle.min() < gap / 4:
        raise ContourHitsSpectrum(
            f"contour approaches spectrum to {dist_to_circle.min():.3e} "
            f"(need at least gap/4 = {gap / 4:.3e})"
        )
    inside = np.abs(w - contour.center) < contour.radius
    if np.any(inside != occ):
        raise ContourHitsSpectrum(
            "contour encloses the wrong spectral subset (occupied bands must "
            "be inside, unoccupied outside)"
        )
    comm_pa = p.op.data @ a.data - a.data @ p.op.data
    eye = np.eye(h.dim, dtype=complex)
    acc = np.zeros_like(a.data)
    for j in range(contour.nodes):
        phase = np.exp(2j * np.pi * j / contour.nodes)
        z = contour.center + contour.radius * phase
        weight = 1j * contour.radius * phase / contour.nodes
        try:
            resolvent = np.linalg.inv(h.data - z * eye)
        except np.linalg.LinAlgError as exc:
            raise SingularResolvent(f"solve failed at z = {z:.6g}") from exc
        acc += weight * (resolvent @ comm_pa @ resolvent)
    return FiberOperator(a.grid, acc)
