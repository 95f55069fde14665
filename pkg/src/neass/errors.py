"""Exception types raised by the library.

Every failure mode that a caller can meaningfully react to gets its own
class; generic misuse (wrong types, bad argument values) raises the
builtin ValueError/TypeError as usual.
"""


class NeassError(Exception):
    """Base class for all library-specific errors."""


class DegenerateLattice(NeassError):
    """Lattice basis vectors are (numerically) linearly dependent."""


class ShapeMismatch(NeassError):
    """Operands live on different grids or have different fiber dimensions."""


class GridTooCoarse(NeassError):
    """A hopping vector is not resolved by the momentum grid."""


class GapClosed(NeassError):
    """The Fermi energy is not inside an open spectral gap."""


class RankInconsistent(NeassError):
    """The number of occupied bands varies across the grid."""


class NotHermitian(NeassError):
    """An operation required a Hermitian field and did not get one."""


class NotUnitary(NeassError):
    """An operation required a unitary field and did not get one."""


class InvalidProjection(NeassError):
    """A field violates the orthogonal-projection invariants."""


class NotOffDiagonal(NeassError):
    """Input to the inverse Liouvillian has a sizable block-diagonal part."""


class GapViolation(NeassError):
    """Occupied/unoccupied eigenvalue pairs come closer than the gap allows;
    the projection passed in is inconsistent with the Hamiltonian."""


class ContourHitsSpectrum(NeassError):
    """A resolvent contour passes too close to, or wrongly encloses, spectrum."""


class SingularResolvent(NeassError):
    """A linear solve against (H - z) failed."""


class MissingGenerator(NeassError):
    """A series coefficient references a generator that was not supplied."""


class NotPeriodic(NeassError):
    """The requested object has no representation as a periodic fiber field."""


class OracleInconclusive(NeassError):
    """The lattice Chern oracle could not produce a trustworthy integer."""
