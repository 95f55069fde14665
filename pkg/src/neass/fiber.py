"""Periodic operators as matrix-valued fields over the momentum grid.

A FiberOperator stores one N x N complex matrix per grid node (node-major
layout, matrices contiguous within a node).  Pointwise algebra is plain
batched matrix arithmetic.  The one grid-global operation is the commutator
with a position operator, which on smooth periodic fields acts as a momentum
derivative,

    [A, X_axis](k) = -i dA/dk_axis,

and is evaluated spectrally: FFT over the grid per matrix entry, multiply
each mode e^{i k.R} by i R_axis, inverse FFT.  This is exact for fields with
finitely many Fourier modes inside the grid's alias-free window (any
finite-range hopping Hamiltonian on an adequate grid) and converges
super-algebraically for analytic fields such as Fermi projections of gapped
Hamiltonians.  A centered finite-difference fallback is kept for debugging.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidProjection,
    NotHermitian,
    ShapeMismatch,
)
from .lattice import KGrid, _axis_index, bz_mean

# Default momentum-derivative scheme; "fd" is a debugging fallback only.
_derivative_scheme = "fft"

HERMITICITY_TOL = 1e-12
IDEMPOTENCY_TOL = 1e-10


def set_derivative_scheme(scheme: str) -> str:
    """Set the module-wide derivative scheme ('fft' or 'fd'); returns the
    previous one so callers can restore it."""
    global _derivative_scheme
    if scheme not in ("fft", "fd"):
        raise ValueError(f"derivative scheme must be 'fft' or 'fd', got {scheme!r}")
    previous = _derivative_scheme
    _derivative_scheme = scheme
    return previous


def get_derivative_scheme() -> str:
    return _derivative_scheme


@dataclass(frozen=True)
class FiberOperator:
    """A field of N x N complex matrices on a KGrid.

    Values are immutable by convention: operations return new instances and
    never write into ``data``.  Set ``hermitian=True`` to assert (and check)
    nodewise Hermiticity.
    """

    grid: KGrid
    data: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.ndim != 4 or data.shape[2] != data.shape[3]:
            raise ShapeMismatch(
                f"data must have shape (n1, n2, N, N), got {data.shape}"
            )
        if data.shape[:2] != self.grid.shape:
            raise ShapeMismatch(
                f"data grid shape {data.shape[:2]} != KGrid shape {self.grid.shape}"
            )
        object.__setattr__(self, "data", data)
        if self.hermitian:
            defect = self.hermiticity_defect()
            if defect >= HERMITICITY_TOL:
                raise NotHermitian(
                    f"field flagged hermitian but max |A - A^dag| = {defect:.3e}"
                )

    # -- basic queries ------------------------------------------------------

    @property
    def dim(self) -> int:
        return self.data.shape[2]

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.data - _dagger(self.data)).max())

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        return self.hermiticity_defect() < tol

    # -- pointwise algebra ----------------------------------------------------

    def __add__(self, other: "FiberOperator") -> "FiberOperator":
        _check_compatible(self, other)
        return FiberOperator(self.grid, self.data + other.data)

    def __sub__(self, other: "FiberOperator") -> "FiberOperator":
        _check_compatible(self, other)
        return FiberOperator(self.grid, self.data - other.data)

    def __neg__(self) -> "FiberOperator":
        return FiberOperator(self.grid, -self.data)

    def __mul__(self, c: complex) -> "FiberOperator":
        return FiberOperator(self.grid, self.data * complex(c))

    __rmul__ = __mul__

    def __truediv__(self, c: complex) -> "FiberOperator":
        return FiberOperator(self.grid, self.data / complex(c))

    def __matmul__(self, other: "FiberOperator") -> "FiberOperator":
        _check_compatible(self, other)
        return FiberOperator(self.grid, self.data @ other.data)

    def dagger(self) -> "FiberOperator":
        return FiberOperator(self.grid, _dagger(self.data), hermitian=self.hermitian)


def _dagger(data: np.ndarray) -> np.ndarray:
    return data.conj().swapaxes(-1, -2)


def _check_compatible(a: FiberOperator, b: FiberOperator) -> None:
    if a.grid != b.grid:
        raise ShapeMismatch("operands live on different grids")
    if a.dim != b.dim:
        raise ShapeMismatch(f"fiber dimensions differ: {a.dim} vs {b.dim}")


def zero_field(grid: KGrid, dim: int) -> FiberOperator:
    return FiberOperator(grid, np.zeros((*grid.shape, dim, dim), dtype=complex))


def identity_field(grid: KGrid, dim: int) -> FiberOperator:
    data = np.broadcast_to(np.eye(dim, dtype=complex), (*grid.shape, dim, dim)).copy()
    return FiberOperator(grid, data, hermitian=True)


def constant_field(grid: KGrid, matrix: np.ndarray) -> FiberOperator:
    matrix = np.asarray(matrix, dtype=complex)
    data = np.broadcast_to(matrix, (*grid.shape, *matrix.shape)).copy()
    return FiberOperator(grid, data)


def add(a: FiberOperator, b: FiberOperator) -> FiberOperator:
    return a + b


def scale(c: complex, a: FiberOperator) -> FiberOperator:
    return c * a


def mul(a: FiberOperator, b: FiberOperator) -> FiberOperator:
    return a @ b


def commutator(a: FiberOperator, b: FiberOperator) -> FiberOperator:
    _check_compatible(a, b)
    return FiberOperator(a.grid, a.data @ b.data - b.data @ a.data)


def dagger(a: FiberOperator) -> FiberOperator:
    return a.dagger()


# -- momentum derivatives ----------------------------------------------------


def k_derivative(a: FiberOperator, axis: str | int, scheme: str | None = None) -> FiberOperator:
    """dA/dk_axis as a fiber field (axis is Cartesian 'x' or 'y')."""
    ax = _axis_index(axis)
    scheme = scheme or _derivative_scheme
    if scheme == "fft":
        r_axis = a.grid.mode_vectors()[..., ax]
        modes = np.fft.fft2(a.data, axes=(0, 1))
        out = np.fft.ifft2(modes * (1j * r_axis)[..., None, None], axes=(0, 1))
    elif scheme == "fd":
        # centered differences in the lattice coordinates k.a_i, combined
        # into the Cartesian derivative through d(k.a_i)/dk_axis = a_i[axis]
        lat = a.grid.lattice
        h1 = 2.0 * np.pi / a.grid.n1
        h2 = 2.0 * np.pi / a.grid.n2
        d1 = (np.roll(a.data, -1, axis=0) - np.roll(a.data, 1, axis=0)) / (2 * h1)
        d2 = (np.roll(a.data, -1, axis=1) - np.roll(a.data, 1, axis=1)) / (2 * h2)
        out = lat.a1[ax] * d1 + lat.a2[ax] * d2
    else:
        raise ValueError(f"unknown derivative scheme {scheme!r}")
    return FiberOperator(a.grid, out)


def commutator_with_position(
    a: FiberOperator, axis: str | int, scheme: str | None = None
) -> FiberOperator:
    """Fiber field of [A, X_axis] = -i dA/dk_axis.

    Grid-global (FFT) when the spectral scheme is active; everything else in
    this module is pointwise over nodes.
    """
    return -1j * k_derivative(a, axis, scheme)


# -- norms, traces, exponentials ----------------------------------------------


def sup_fiber_norm(a: FiberOperator) -> float:
    """max over nodes of the matrix operator norm (largest singular value)."""
    return float(np.linalg.norm(a.data, ord=2, axis=(-2, -1)).max())


def fiber_trace(a: FiberOperator) -> np.ndarray:
    """Per-node matrix trace, shape (n1, n2)."""
    return np.trace(a.data, axis1=-2, axis2=-1)


def trace_per_unit_volume(a: FiberOperator) -> complex:
    """tau(A) = (1/cell_area) * BZ-average of Tr A(k)."""
    return bz_mean(fiber_trace(a), a.grid) / a.grid.lattice.cell_area


def unitary_exp(s: FiberOperator, t: float, herm_tol: float = HERMITICITY_TOL) -> FiberOperator:
    """Nodewise e^{i t S(k)} for Hermitian S, via eigendecomposition."""
    defect = s.hermiticity_defect()
    if defect >= herm_tol:
        raise NotHermitian(
            f"unitary_exp needs a Hermitian field; max |S - S^dag| = {defect:.3e}"
        )
    w, v = np.linalg.eigh(s.data)
    phases = np.exp(1j * t * w)
    out = (v * phases[..., None, :]) @ _dagger(v)
    return FiberOperator(s.grid, out)


# -- projections ----------------------------------------------------------------


@dataclass(frozen=True)
class ProjectionField:
    """A FiberOperator constrained to be an orthogonal projection of constant
    integer rank.  Construction validates idempotency, Hermiticity and the
    nodewise trace; pass the pieces through ``op`` for algebra."""

    op: FiberOperator
    rank: int

    def __post_init__(self):
        p = self.op.data
        herm = float(np.abs(p - _dagger(p)).max())
        if herm >= HERMITICITY_TOL:
            raise InvalidProjection(
                f"projection not Hermitian: max |P - P^dag| = {herm:.3e}"
            )
        idem = float(np.linalg.norm(p @ p - p, ord=2, axis=(-2, -1)).max())
        if idem >= IDEMPOTENCY_TOL:
            raise InvalidProjection(
                f"projection not idempotent: max |P^2 - P| = {idem:.3e}"
            )
        traces = np.trace(p, axis1=-2, axis2=-1)
        if not (self.rank >= 1 and int(self.rank) == self.rank):
            raise InvalidProjection(f"rank must be a positive integer, got {self.rank}")
        if np.abs(traces - self.rank).max() >= 1e-10:
            raise InvalidProjection(
                f"nodewise trace deviates from rank {self.rank} by up to "
                f"{np.abs(traces - self.rank).max():.3e}"
            )

    @property
    def grid(self) -> KGrid:
        return self.op.grid

    @property
    def dim(self) -> int:
        return self.op.dim

    def complement(self) -> FiberOperator:
        return identity_field(self.grid, self.dim) - self.op


def off_diagonal(a: FiberOperator, p: ProjectionField) -> FiberOperator:
    """Block-antidiagonal part P A P^perp + P^perp A P of A relative to P."""
    if not isinstance(p, ProjectionField):
        raise InvalidProjection("off_diagonal needs a validated ProjectionField")
    _check_compatible(a, p.op)
    pd = p.op.data
    pap = pd @ a.data @ pd
    # P A Pc + Pc A P = P A + A P - 2 P A P
    out = pd @ a.data + a.data @ pd - 2.0 * pap
    return FiberOperator(a.grid, out)


def diagonal_part(a: FiberOperator, p: ProjectionField) -> FiberOperator:
    """Block-diagonal part P A P + P^perp A P^perp."""
    return a - off_diagonal(a, p)


# -- debugging dump -------------------------------------------------------------


def write_fiber_text(a: FiberOperator, path) -> None:
    """Plain-text dump: one line per matrix entry,
    ``m1 m2 row col re im``; a single header line carries the shape."""
    n1, n2 = a.grid.shape
    with open(path, "w") as fh:
        fh.write(f"# fiber {n1} {n2} {a.dim}\n")
        for m1 in range(n1):
            for m2 in range(n2):
                for r in range(a.dim):
                    for c in range(a.dim):
                        z = a.data[m1, m2, r, c]
                        fh.write(f"{m1} {m2} {r} {c} {float(z.real)!r} {float(z.imag)!r}\n")


def read_fiber_text(path, grid: KGrid) -> FiberOperator:
    with open(path) as fh:
        header = fh.readline().split()
        n1, n2, dim = int(header[2]), int(header[3]), int(header[4])
        if (n1, n2) != grid.shape:
            raise ShapeMismatch(f"dump is {n1}x{n2}, grid is {grid.shape}")
        data = np.zeros((n1, n2, dim, dim), dtype=complex)
        for line in fh:
            m1, m2, r, c, re, im = line.split()
            data[int(m1), int(m2), int(r), int(c)] = float(re) + 1j * float(im)
    return FiberOperator(grid, data)
