"""Recursive construction of the almost-stationary state.

Perturbing a gapped periodic Hamiltonian H0 by a weak linear potential along
y, H_eps = H0 - eps*Y, drives the Fermi projection Pi0 out of equilibrium.
The almost-stationary state of order n is the conjugated projection

    Pi_n(eps) = e^{+i eps S} Pi0 e^{-i eps S},   S = sum_{j=1..n} eps^{j-1} A_j,

whose commutator with H_eps is O(eps^{n+1}).  The generators A_j are fixed
order by order: expanding e^{-i eps S} B e^{i eps S} in powers of eps with
the derivation L_A(B) = -i[A, B] gives coefficients

    B_j = sum_{m=1..j} (1/m!) sum_{j_1+...+j_m = j, j_i >= 1}
              L_{A_{j_1}}( ... L_{A_{j_m}}(B) ... ),

and requiring each order of [e^{-i eps S}(H0 - eps Y)e^{i eps S}, Pi0] to
vanish turns into an inverse-Liouvillian solve per order.  The unbounded,
non-periodic Y never appears as an operator: it enters only through the
derivation B -> [B, Y] = -i dB/dk_y and through its block-antidiagonal part
[[Y, Pi0], Pi0], both of which are honest periodic fields.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np

from .errors import MissingGenerator, NotPeriodic
from .fiber import (
    FiberOperator,
    ProjectionField,
    commutator,
    commutator_with_position,
    off_diagonal,
    sup_fiber_norm,
    unitary_exp,
    zero_field,
)
from .lattice import _axis_index
from .liouvillian import inverse_liouvillian_spectral

#: tolerances for the generator invariants (Hermitian, off-diagonal)
GENERATOR_TOL = 1e-10


@lru_cache(maxsize=None)
def compositions(j: int) -> tuple[tuple[int, ...], ...]:
    """All ordered tuples of positive integers summing to j."""
    if j == 0:
        return ((),)
    out = []
    for first in range(1, j + 1):
        for rest in compositions(j - first):
            out.append((first, *rest))
    return tuple(out)


def _lie(a: FiberOperator, b: FiberOperator) -> FiberOperator:
    """L_A(B) = -i [A, B]."""
    return -1j * commutator(a, b)


def _lie_y(a: FiberOperator) -> FiberOperator:
    """L_A(Y) = -i [A, Y] = -i * (-i dA/dk_y) -- periodic even though Y is not."""
    return -1j * commutator_with_position(a, "y")


def adjoint_series_term(
    b: FiberOperator, gens: list[FiberOperator], order: int
) -> FiberOperator:
    """Coefficient of eps^order in e^{-i eps S} B e^{i eps S}.

    ``gens`` holds A_1..A_j.  The single case where A_order itself may be
    absent is len(gens) == order - 1: that drops exactly the one-factor
    composition (order,), i.e. the -L_{H0}(A_order) term the recursion is
    about to solve for.  Any other missing index is an error.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    if order == 0:
        return b
    total = zero_field(b.grid, b.dim)
    for comp in compositions(order):
        if max(comp) > len(gens):
            if comp == (order,) and len(gens) == order - 1:
                continue
            raise MissingGenerator(
                f"composition {comp} of order {order} references generator "
                f"A_{max(comp)} but only {len(gens)} are available"
            )
        term = b
        for idx in reversed(comp):  # innermost factor acts first
            term = _lie(gens[idx - 1], term)
        total = total + term / factorial(len(comp))
    return total


def adjoint_series_term_y(gens: list[FiberOperator], order: int) -> FiberOperator:
    """Same expansion coefficient with B = Y, the linear potential coordinate.

    The innermost factor L_{A}(Y) is replaced by the periodic field
    -i[A, Y] = -dA/dk_y; every output is therefore periodic.  order = 0 would
    be Y itself, which has no fiber representation.
    """
    if order == 0:
        raise NotPeriodic(
            "the order-0 coefficient is Y itself; only its off-diagonal part "
            "exists as a periodic field (see position_offdiag)"
        )
    if order < 0:
        raise ValueError("order must be >= 1")
    first = gens[0] if gens else None
    if first is None:
        raise MissingGenerator("no generators supplied")
    total = zero_field(first.grid, first.dim)
    for comp in compositions(order):
        if max(comp) > len(gens):
            raise MissingGenerator(
                f"composition {comp} of order {order} references generator "
                f"A_{max(comp)} but only {len(gens)} are available"
            )
        term = _lie_y(gens[comp[-1] - 1])
        for idx in reversed(comp[:-1]):
            term = _lie(gens[idx - 1], term)
        total = total + term / factorial(len(comp))
    return total


def position_offdiag(p: ProjectionField, axis: str | int = "y") -> FiberOperator:
    """Block-antidiagonal part of a position operator relative to P:
    X_axis^OD = [[X_axis, P], P] = [i dP/dk_axis, P], a bounded periodic field."""
    _axis_index(axis)
    comm_xp = -1.0 * commutator_with_position(p.op, axis)  # [X, P] = -[P, X]
    return commutator(comm_xp, p.op)


@dataclass(frozen=True)
class GeneratorSequence:
    """The ordered generators [A_1 .. A_n] of the conjugation series."""

    generators: tuple[FiberOperator, ...]

    @property
    def order(self) -> int:
        return len(self.generators)

    def truncate(self, n: int) -> "GeneratorSequence":
        if n > self.order:
            raise MissingGenerator(f"asked for {n} generators, have {self.order}")
        return GeneratorSequence(self.generators[:n])

    def validate(self, p: ProjectionField, tol: float = GENERATOR_TOL) -> None:
        """Check the gauge invariants: every A_j Hermitian and off-diagonal."""
        for j, a in enumerate(self.generators, start=1):
            herm = a.hermiticity_defect()
            if herm >= tol:
                raise ValueError(f"A_{j} not Hermitian: defect {herm:.3e}")
            od = sup_fiber_norm(off_diagonal(a, p) - a)
            if od >= tol:
                raise ValueError(f"A_{j} not off-diagonal: defect {od:.3e}")


@dataclass(frozen=True)
class NeassState:
    """One assembled almost-stationary state Pi_n(eps)."""

    epsilon: float
    order: int
    s: FiberOperator
    pi: ProjectionField
    defect: float


def build_generators(
    h: FiberOperator,
    p0: ProjectionField,
    n: int,
    diagonal_gauge=None,
) -> GeneratorSequence:
    """Solve the order-by-order recursion for A_1 .. A_n.

    A_1 = -Linv(Y^OD); for j > 1,

        A_j = Linv( (L_{j-1} - Y_{j-1})^OD ),

    where L_{j-1} collects all order-j conjugation terms of H0 except the
    unknown -L_{H0}(A_j), and Y_{j-1} is the order-(j-1) conjugation term
    of Y.  Off-diagonal gauge: the block-diagonal part of every A_j is left
    at zero unless ``diagonal_gauge(j, h, p0)`` supplies one (its
    off-diagonal part is discarded).
    """
    if n < 0:
        raise ValueError("order must be >= 0")
    gens: list[FiberOperator] = []
    for j in range(1, n + 1):
        if j == 1:
            d = -1.0 * position_offdiag(p0, "y")
        else:
            lj = adjoint_series_term(h, gens, j)
            yj = adjoint_series_term_y(gens, j - 1)
            d = off_diagonal(lj - yj, p0)
        a = inverse_liouvillian_spectral(h, p0, d)
        # the exact solution is Hermitian; strip accumulated roundoff
        a = 0.5 * (a + a.dagger())
        if diagonal_gauge is not None:
            extra = diagonal_gauge(j, h, p0)
            if extra is not None:
                a = a + (extra - off_diagonal(extra, p0))
        gens.append(a)
    seq = GeneratorSequence(tuple(gens))
    if diagonal_gauge is None:
        seq.validate(p0)  # a nonzero gauge intentionally breaks off-diagonality
    return seq


def assemble_neass(
    h: FiberOperator,
    p0: ProjectionField,
    gens: GeneratorSequence,
    epsilon: float,
) -> NeassState:
    """Conjugate Pi0 with e^{+i eps S}, S = sum eps^{j-1} A_j, and record the
    stationarity defect of the result."""
    if not (0.0 < epsilon <= 1.0):
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    if gens.order == 0:
        s = zero_field(h.grid, h.dim)
    else:
        s = gens.generators[0]
        for j in range(2, gens.order + 1):
            s = s + epsilon ** (j - 1) * gens.generators[j - 1]
    u = unitary_exp(s, epsilon, herm_tol=GENERATOR_TOL)
    pi_data = u @ p0.op @ u.dagger()
    pi = ProjectionField(pi_data, rank=p0.rank)
    defect = stationarity_defect(h, pi, epsilon)
    return NeassState(epsilon=epsilon, order=gens.order, s=s, pi=pi, defect=defect)


def stationarity_defect(h: FiberOperator, pi: ProjectionField, epsilon: float) -> float:
    """sup-norm of Pi^perp [H_eps, Pi] Pi = Pi^perp H_eps Pi.

    [H_eps, Pi] = [H0, Pi] - eps [Y, Pi] with [Y, Pi] = -[Pi, Y], so the
    whole expression is a periodic field even though H_eps itself is not.
    Scales like eps^{n+1} when Pi is the order-n almost-stationary state.
    """
    c = commutator(h, pi.op) + epsilon * commutator_with_position(pi.op, "y")
    blocked = pi.complement() @ c @ pi.op
    return sup_fiber_norm(blocked)


def recursion_residual(
    h: FiberOperator, p0: ProjectionField, gens: GeneratorSequence, j: int
) -> float:
    """sup-norm of [H_{0,j} - Y_{j-1}, Pi0] *after* A_j has been inserted;
    vanishes (up to discretization of the j = 1 position derivative) when the
    recursion was solved correctly."""
    if not (1 <= j <= gens.order):
        raise MissingGenerator(f"j = {j} outside the built range 1..{gens.order}")
    glist = list(gens.generators[:j])
    hj = adjoint_series_term(h, glist, j)
    if j == 1:
        # [H_{0,1}, P] - [Y, P] with [Y, P] = -[P, Y]
        res = commutator(hj, p0.op) + commutator_with_position(p0.op, "y")
    else:
        yj = adjoint_series_term_y(glist, j - 1)
        res = commutator(hj - yj, p0.op)
    return sup_fiber_norm(res)
