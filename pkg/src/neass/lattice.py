"""2-D Bravais lattices, reciprocal bases and Brillouin-zone sampling grids.

The momentum grid is the uniform n1 x n2 sampling of one fundamental cell
of the reciprocal lattice, k = (m1/n1) b1 + (m2/n2) b2.  Averages over that
grid are the trapezoidal rule on the torus, which converges faster than any
power of 1/n for smooth integrands and is *exact* on any finite set of
Fourier modes the grid resolves.  All trace-per-unit-volume evaluations in
the package reduce to this quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateLattice, ShapeMismatch

TWO_PI = 2.0 * np.pi

#: map axis labels to Cartesian component indices
AXES = {"x": 0, "y": 1}


def _axis_index(axis: str | int) -> int:
    if isinstance(axis, str):
        try:
            return AXES[axis]
        except KeyError:
            raise ValueError(f"axis must be 'x' or 'y', got {axis!r}") from None
    if axis in (0, 1):
        return int(axis)
    raise ValueError(f"axis must be 'x'/'y' or 0/1, got {axis!r}")


@dataclass(frozen=True)
class BravaisLattice:
    """A 2-D Bravais lattice spanned by the basis vectors ``a1`` and ``a2``."""

    a1: np.ndarray
    a2: np.ndarray

    def __post_init__(self):
        a1 = np.asarray(self.a1, dtype=float).reshape(2)
        a2 = np.asarray(self.a2, dtype=float).reshape(2)
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)
        if abs(self.det) <= 1e-12:
            raise DegenerateLattice(
                f"basis vectors {a1} and {a2} are numerically collinear"
            )

    @property
    def basis(self) -> np.ndarray:
        """Basis as a 2x2 matrix with a1, a2 as columns."""
        return np.column_stack([self.a1, self.a2])

    @property
    def det(self) -> float:
        """Signed determinant det[a1 a2]; its sign fixes the orientation."""
        return float(self.a1[0] * self.a2[1] - self.a1[1] * self.a2[0])

    @property
    def cell_area(self) -> float:
        return abs(self.det)

    def vector(self, r1: int, r2: int) -> np.ndarray:
        """Cartesian coordinates of the lattice vector r1*a1 + r2*a2."""
        return r1 * self.a1 + r2 * self.a2


def reciprocal_basis(lattice: BravaisLattice) -> tuple[np.ndarray, np.ndarray]:
    """Dual basis (b1, b2) with a_i . b_j = 2*pi*delta_ij.

    Raises DegenerateLattice for a collinear direct basis (checked at
    lattice construction already; re-checked here so the function is safe
    on manually built inputs).
    """
    B = TWO_PI * np.linalg.inv(lattice.basis).T
    return B[:, 0].copy(), B[:, 1].copy()


def square_lattice(a: float = 1.0) -> BravaisLattice:
    return BravaisLattice(np.array([a, 0.0]), np.array([0.0, a]))


def triangular_lattice(a: float = 1.0) -> BravaisLattice:
    return BravaisLattice(
        np.array([a, 0.0]), np.array([0.5 * a, 0.5 * np.sqrt(3.0) * a])
    )


@dataclass(frozen=True)
class KGrid:
    """Uniform sampling of the Brillouin zone of ``lattice``.

    Nodes are k[m1, m2] = (m1/n1) b1 + (m2/n2) b2 with 0 <= m_i < n_i, so the
    grid contains k = 0 and tiles one reciprocal fundamental cell exactly
    once.  Immutable after construction; safe to share between threads.
    """

    lattice: BravaisLattice
    n1: int
    n2: int
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not (isinstance(self.n1, (int, np.integer)) and self.n1 >= 1):
            raise ValueError(f"n1 must be a positive integer, got {self.n1!r}")
        if not (isinstance(self.n2, (int, np.integer)) and self.n2 >= 1):
            raise ValueError(f"n2 must be a positive integer, got {self.n2!r}")
        object.__setattr__(self, "n1", int(self.n1))
        object.__setattr__(self, "n2", int(self.n2))

    # -- geometry ---------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    @property
    def size(self) -> int:
        return self.n1 * self.n2

    @property
    def reciprocal(self) -> tuple[np.ndarray, np.ndarray]:
        if "recip" not in self._cache:
            self._cache["recip"] = reciprocal_basis(self.lattice)
        return self._cache["recip"]

    @property
    def bz_volume(self) -> float:
        b1, b2 = self.reciprocal
        return abs(float(np.linalg.det(np.column_stack([b1, b2]))))

    @property
    def nodes(self) -> np.ndarray:
        """Cartesian k-points, shape (n1, n2, 2)."""
        if "nodes" not in self._cache:
            b1, b2 = self.reciprocal
            m1 = np.arange(self.n1)[:, None, None] / self.n1
            m2 = np.arange(self.n2)[None, :, None] / self.n2
            self._cache["nodes"] = m1 * b1 + m2 * b2
        return self._cache["nodes"]

    def reduced(self, i: int) -> np.ndarray:
        """k . a_i on the grid, shape (n1, n2); exact multiples of 2*pi/n_i."""
        key = ("reduced", i)
        if key not in self._cache:
            if i == 0:
                vals = TWO_PI * (np.arange(self.n1)[:, None] / self.n1)
                vals = np.broadcast_to(vals, self.shape).copy()
            elif i == 1:
                vals = TWO_PI * (np.arange(self.n2)[None, :] / self.n2)
                vals = np.broadcast_to(vals, self.shape).copy()
            else:
                raise ValueError("lattice direction index must be 0 or 1")
            self._cache[key] = vals
        return self._cache[key]

    # -- spectral differentiation tables ----------------------------------

    def mode_vectors(self) -> np.ndarray:
        """Cartesian lattice vector f1*a1 + f2*a2 for every DFT mode.

        Shape (n1, n2, 2), with integer frequencies f_i in the centered
        window used by the FFT.  Nyquist rows/columns (even n_i) are zeroed:
        those modes carry no usable derivative information and keeping them
        breaks Hermiticity of differentiated Hermitian fields.
        """
        if "modes" not in self._cache:
            f1 = np.fft.fftfreq(self.n1, 1.0 / self.n1)
            f2 = np.fft.fftfreq(self.n2, 1.0 / self.n2)
            if self.n1 % 2 == 0:
                f1[self.n1 // 2] = 0.0
            if self.n2 % 2 == 0:
                f2[self.n2 // 2] = 0.0
            R = (
                f1[:, None, None] * self.lattice.a1
                + f2[None, :, None] * self.lattice.a2
            )
            self._cache["modes"] = R
        return self._cache["modes"]

    def resolves(self, r1: int, r2: int) -> bool:
        """Whether the hopping vector (r1, r2) sits strictly inside the
        alias-free frequency window of the grid."""
        return 2 * abs(r1) < self.n1 and 2 * abs(r2) < self.n2

    def __eq__(self, other):
        return (
            isinstance(other, KGrid)
            and self.n1 == other.n1
            and self.n2 == other.n2
            and np.array_equal(self.lattice.a1, other.lattice.a1)
            and np.array_equal(self.lattice.a2, other.lattice.a2)
        )


def bz_mean(values: np.ndarray, grid: KGrid) -> complex:
    """Arithmetic mean of per-node values = (1/|BZ|) * integral over the BZ.

    Exact (discrete orthogonality) for every Fourier mode e^{i k.R} the grid
    resolves; super-algebraically convergent for smooth integrands.
    """
    values = np.asarray(values)
    if values.shape != grid.shape and values.shape != (grid.size,):
        raise ShapeMismatch(
            f"expected one value per node, {grid.shape} or ({grid.size},); "
            f"got shape {values.shape}"
        )
    return complex(values.mean())
