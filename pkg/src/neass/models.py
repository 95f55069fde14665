"""Catalog of gapped tight-binding models and their Bloch fields.

A model is a finite list of hopping matrices T_R indexed by integer lattice
coordinates; its Bloch Hamiltonian is H(k) = sum_R e^{i k.R} T_R in the
periodic gauge, so H and all its momentum derivatives are trigonometric
polynomials that the grid reproduces exactly.  The catalog covers the
standard desk-scale Chern-insulator zoo: the two-band square-lattice model
of Qi, Wu and Zhang, the honeycomb model of Haldane, the Harper/Hofstadter
model at commensurate flux (Landau-gauge magnetic cell), and a flat
atomic-limit model whose every response quantity vanishes identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GapClosed, GridTooCoarse, NotHermitian, RankInconsistent
from .fiber import FiberOperator, ProjectionField, _dagger
from .lattice import BravaisLattice, KGrid, _axis_index, square_lattice, triangular_lattice

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

#: eigenvalues closer to mu than this mean the gap is (numerically) closed
GAP_TOL = 1e-8

HOPPING_RANGE_CUTOFF = 8


@dataclass
class HoppingModel:
    """Finite-range hoppings on a Bravais lattice, plus the Fermi energy.

    ``hoppings`` maps integer lattice coordinates (r1, r2) to N x N complex
    matrices.  Construction enforces the Hermiticity closure
    T_{-R} = T_R^dag: missing partners are filled in, conflicting ones are
    rejected.
    """

    lattice: BravaisLattice
    dim: int
    hoppings: dict[tuple[int, int], np.ndarray]
    mu: float = 0.0
    name: str = "model"
    range_cutoff: int = HOPPING_RANGE_CUTOFF

    def __post_init__(self):
        clean: dict[tuple[int, int], np.ndarray] = {}
        for key, mat in self.hoppings.items():
            r = (int(key[0]), int(key[1]))
            mat = np.asarray(mat, dtype=complex)
            if mat.shape != (self.dim, self.dim):
                raise ValueError(
                    f"hopping {r} has shape {mat.shape}, expected {(self.dim, self.dim)}"
                )
            if max(abs(r[0]), abs(r[1])) > self.range_cutoff:
                raise ValueError(f"hopping {r} exceeds range cutoff {self.range_cutoff}")
            clean[r] = mat
        for r, mat in list(clean.items()):
            minus = (-r[0], -r[1])
            if minus in clean:
                if np.abs(clean[minus] - mat.conj().T).max() > 1e-12:
                    raise ValueError(
                        f"hoppings at {r} and {minus} violate T_(-R) = T_R^dag"
                    )
            else:
                clean[minus] = mat.conj().T
        self.hoppings = clean

    def hopping_items(self):
        """Hoppings in deterministic (sorted-key) order."""
        return sorted(self.hoppings.items())


@dataclass(frozen=True)
class GapReport:
    """Spectral-gap summary around the Fermi energy."""

    gap_lower: float  # max over k of the top occupied eigenvalue
    gap_upper: float  # min over k of the bottom unoccupied eigenvalue
    rank: int

    @property
    def gap_width(self) -> float:
        return self.gap_upper - self.gap_lower


def build_hamiltonian(model: HoppingModel, grid: KGrid) -> FiberOperator:
    """Bloch field H(k) = sum_R e^{i k.R} T_R on the grid.

    Each hopping must sit inside the grid's alias-free frequency window
    (2|r_i| < n_i), which makes the field exactly reproduced by its own
    DFT modes -- the property spectral differentiation relies on.
    """
    k1 = grid.reduced(0)
    k2 = grid.reduced(1)
    data = np.zeros((*grid.shape, model.dim, model.dim), dtype=complex)
    for (r1, r2), mat in model.hopping_items():
        if not grid.resolves(r1, r2):
            raise GridTooCoarse(
                f"hopping {(r1, r2)} not resolved by a {grid.n1}x{grid.n2} grid"
            )
        phase = np.exp(1j * (r1 * k1 + r2 * k2))
        data += phase[..., None, None] * mat
    return FiberOperator(grid, data, hermitian=True)


def analytic_velocity(model: HoppingModel, grid: KGrid, axis: str | int) -> FiberOperator:
    """Fiber field of the current operator i[H, X_axis], i.e.
    dH/dk_axis = sum_R i R_axis e^{i k.R} T_R, via term-by-term differentiation."""
    ax = _axis_index(axis)
    k1 = grid.reduced(0)
    k2 = grid.reduced(1)
    data = np.zeros((*grid.shape, model.dim, model.dim), dtype=complex)
    for (r1, r2), mat in model.hopping_items():
        if not grid.resolves(r1, r2):
            raise GridTooCoarse(
                f"hopping {(r1, r2)} not resolved by a {grid.n1}x{grid.n2} grid"
            )
        r_cart = model.lattice.vector(r1, r2)[ax]
        if r_cart == 0.0:
            continue
        phase = np.exp(1j * (r1 * k1 + r2 * k2))
        data += (1j * r_cart) * phase[..., None, None] * mat
    return FiberOperator(grid, data)


def fermi_projection(h: FiberOperator, mu: float) -> tuple[ProjectionField, GapReport]:
    """Spectral projection onto eigenvalues below mu, nodewise.

    Raises GapClosed when any eigenvalue comes within GAP_TOL of mu (or when
    mu falls outside the spectrum entirely) and RankInconsistent when the
    occupied count varies across nodes, which numerically signals a gap
    closing between grid points.
    """
    if not h.is_hermitian():
        raise NotHermitian("fermi_projection needs a Hermitian field")
    w, v = np.linalg.eigh(h.data)
    dist = np.abs(w - mu).min()
    if dist < GAP_TOL:
        raise GapClosed(
            f"an eigenvalue lies within {dist:.3e} of mu = {mu} (tolerance {GAP_TOL:g})"
        )
    occupied = w < mu
    counts = occupied.sum(axis=-1)
    m = int(counts.flat[0])
    if not np.all(counts == m):
        raise RankInconsistent(
            f"occupied count varies over the grid ({counts.min()}..{counts.max()})"
        )
    if m == 0 or m == h.dim:
        raise GapClosed(
            f"mu = {mu} lies outside the spectrum (occupied rank {m} of {h.dim})"
        )
    proj = (v * occupied[..., None, :]) @ _dagger(v)
    report = GapReport(
        gap_lower=float(w[occupied].max()),
        gap_upper=float(w[~occupied].min()),
        rank=m,
    )
    return ProjectionField(FiberOperator(h.grid, proj), rank=m), report


# -- catalog -----------------------------------------------------------------


def qwz(u: float, mu: float = 0.0) -> HoppingModel:
    """Qi-Wu-Zhang two-band Chern insulator on the square lattice:
    H(k) = sin k1 * sx + sin k2 * sy + (u + cos k1 + cos k2) * sz.
    Gapped for u not in {0, +-2}; the occupied band carries a unit Chern
    number for 0 < |u| < 2 and is trivial for |u| > 2."""
    hop1 = 0.5 * SIGMA_Z - 0.5j * SIGMA_X
    hop2 = 0.5 * SIGMA_Z - 0.5j * SIGMA_Y
    return HoppingModel(
        lattice=square_lattice(),
        dim=2,
        hoppings={(0, 0): u * SIGMA_Z, (1, 0): hop1, (0, 1): hop2},
        mu=mu,
        name=f"qwz(u={u:g})",
    )


def haldane(t1: float = 1.0, t2: float = 0.1, phi: float = np.pi / 2,
            m_onsite: float = 0.0, mu: float = 0.0) -> HoppingModel:
    """Haldane honeycomb model: nearest-neighbour hopping t1, complex
    next-nearest-neighbour hopping t2*e^{+-i phi} (opposite chirality on the
    two sublattices) and a sublattice-staggering mass m_onsite."""
    e_ab = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    up = np.diag([1.0, 0.0]).astype(complex)
    dn = np.diag([0.0, 1.0]).astype(complex)
    hops: dict[tuple[int, int], np.ndarray] = {}

    def put(r, mat):
        hops[r] = hops.get(r, np.zeros((2, 2), dtype=complex)) + mat

    put((0, 0), m_onsite * SIGMA_Z + t1 * (e_ab + e_ab.T))
    put((-1, 0), t1 * e_ab)
    put((1, 0), t1 * e_ab.T)
    put((0, -1), t1 * e_ab)
    put((0, 1), t1 * e_ab.T)
    # chiral NNN loops: +phi on sublattice A along a1, a2-a1, -a2; conjugate on B
    for r in ((1, 0), (-1, 1), (0, -1)):
        mat = t2 * (np.exp(1j * phi) * up + np.exp(-1j * phi) * dn)
        put(r, mat)
        put((-r[0], -r[1]), mat.conj().T)
    return HoppingModel(
        lattice=triangular_lattice(),
        dim=2,
        hoppings=hops,
        mu=mu,
        name=f"haldane(t1={t1:g},t2={t2:g},phi={phi:g},M={m_onsite:g})",
    )


def hofstadter(p: int, q: int, mu: float, t: float = 1.0) -> HoppingModel:
    """Square-lattice Hofstadter model at commensurate flux p/q per plaquette.

    Landau gauge: x-hoppings are real, the y-hopping from column j carries the
    Peierls phase e^{2 pi i (p/q) j}.  The magnetic unit cell spans q
    plaquettes (a1 = (q, 0), a2 = (0, 1)) with one orbital per site, so the
    fiber dimension is q.  ``mu`` must be placed inside one of the butterfly
    gaps; fermi_projection reports GapClosed otherwise.
    """
    p, q = int(p), int(q)
    if q < 2 or p == 0:
        raise ValueError("need q >= 2 and p != 0 for a nontrivial magnetic cell")
    if np.gcd(p, q) != 1:
        raise ValueError(f"flux {p}/{q} is not in lowest terms")
    lattice = BravaisLattice(np.array([float(q), 0.0]), np.array([0.0, 1.0]))
    intra = np.zeros((q, q), dtype=complex)
    for j in range(q - 1):
        intra[j + 1, j] = -t
        intra[j, j + 1] = -t
    across = np.zeros((q, q), dtype=complex)
    across[q - 1, 0] = -t
    peierls = np.diag([-t * np.exp(2j * np.pi * p / q * j) for j in range(q)])
    return HoppingModel(
        lattice=lattice,
        dim=q,
        hoppings={(0, 0): intra, (1, 0): across, (0, 1): peierls},
        mu=mu,
        name=f"hofstadter(p={p},q={q})",
    )


def flat(onsite: np.ndarray | None = None, mu: float = 0.0) -> HoppingModel:
    """Atomic-limit model: a single k-independent on-site matrix (default
    sigma_z), so the Fermi projection is constant and every transport
    quantity vanishes identically."""
    onsite = SIGMA_Z if onsite is None else np.asarray(onsite, dtype=complex)
    return HoppingModel(
        lattice=square_lattice(),
        dim=onsite.shape[0],
        hoppings={(0, 0): onsite},
        mu=mu,
        name="flat",
    )


def random_hopping_model(
    lattice: BravaisLattice,
    dim: int,
    rng: np.random.Generator,
    rmax: int = 2,
    decay: float = 1.0,
    amplitude: float = 1.0,
    name: str = "random",
) -> HoppingModel:
    """Random finite-range Hermitian model; hopping magnitudes decay
    exponentially with |r1| + |r2| so the resulting fields are smooth on
    modest grids.  Used by the randomized property suites."""
    hops: dict[tuple[int, int], np.ndarray] = {}
    g0 = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    hops[(0, 0)] = amplitude * 0.5 * (g0 + g0.conj().T)
    for r1 in range(-rmax, rmax + 1):
        for r2 in range(-rmax, rmax + 1):
            if (r1, r2) <= (0, 0):
                continue  # closure fills the mirror half
            w = amplitude * np.exp(-decay * (abs(r1) + abs(r2)))
            g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            hops[(r1, r2)] = w * g
    return HoppingModel(lattice=lattice, dim=dim, hoppings=hops, name=name)


# -- plain-text custom models --------------------------------------------------


def hopping_model_from_text(
    path, lattice: BravaisLattice, mu: float = 0.0, name: str = "custom"
) -> HoppingModel:
    """Load hoppings from a text file of lines ``r1 r2 row col re im``
    ('#' starts a comment).  The fiber dimension is inferred from the largest
    orbital index; the Hermiticity closure is applied to one-sided entries
    and verified against two-sided ones by the HoppingModel constructor."""
    entries = []
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 6:
                raise ValueError(f"expected 'r1 r2 row col re im', got {raw!r}")
            r1, r2, row, col = (int(x) for x in parts[:4])
            re, im = float(parts[4]), float(parts[5])
            entries.append((r1, r2, row, col, re + 1j * im))
    if not entries:
        raise ValueError(f"no hopping entries found in {path}")
    dim = 1 + max(max(e[2], e[3]) for e in entries)
    hops: dict[tuple[int, int], np.ndarray] = {}
    for r1, r2, row, col, val in entries:
        mat = hops.setdefault((r1, r2), np.zeros((dim, dim), dtype=complex))
        mat[row, col] += val
    return HoppingModel(lattice=lattice, dim=dim, hoppings=hops, mu=mu, name=name)
