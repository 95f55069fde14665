"""Almost-stationary states and all-orders Hall response for gapped
tight-binding models.

The package builds, for a spectrally gapped periodic Hamiltonian perturbed by
a weak linear potential, the order-n almost-stationary projection
Pi_n(eps) = e^{i eps S} Pi0 e^{-i eps S}, and verifies that the transverse
current it carries equals eps times the (quantized) Hall conductivity up to
O(eps^{n+1}).
"""

from .errors import (
    ContourHitsSpectrum,
    DegenerateLattice,
    GapClosed,
    GapViolation,
    GridTooCoarse,
    InvalidProjection,
    MissingGenerator,
    NeassError,
    NotHermitian,
    NotOffDiagonal,
    NotPeriodic,
    NotUnitary,
    OracleInconclusive,
    RankInconsistent,
    ShapeMismatch,
    SingularResolvent,
)
from .lattice import (
    BravaisLattice,
    KGrid,
    bz_mean,
    reciprocal_basis,
    square_lattice,
    triangular_lattice,
)
from .fiber import (
    FiberOperator,
    ProjectionField,
    commutator,
    commutator_with_position,
    constant_field,
    diagonal_part,
    get_derivative_scheme,
    identity_field,
    k_derivative,
    off_diagonal,
    read_fiber_text,
    set_derivative_scheme,
    sup_fiber_norm,
    trace_per_unit_volume,
    unitary_exp,
    write_fiber_text,
    zero_field,
)
from .models import (
    GapReport,
    HoppingModel,
    analytic_velocity,
    build_hamiltonian,
    fermi_projection,
    flat,
    haldane,
    hofstadter,
    hopping_model_from_text,
    qwz,
    random_hopping_model,
)
from .liouvillian import (
    ContourSpec,
    default_contour,
    inverse_liouvillian_contour,
    inverse_liouvillian_spectral,
)
from .construction import (
    GeneratorSequence,
    NeassState,
    adjoint_series_term,
    adjoint_series_term_y,
    assemble_neass,
    build_generators,
    compositions,
    position_offdiag,
    recursion_residual,
    stationarity_defect,
)
from .response import (
    ScalingFit,
    SweepRecord,
    chern_marker,
    chern_number_fhs,
    chern_simons_check,
    commutator_trace_check,
    current_trace,
    default_epsilons,
    fit_loglog,
    hall_conductivity,
    realspace_trace_oracle,
    residual_scaling_sweep,
    response_current,
    write_fits_csv,
    write_records_csv,
)

__version__ = "0.1.0"
