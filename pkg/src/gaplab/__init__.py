"""Numerical gap labelling for cut-and-project quasicrystal chains."""

from .scheme import (
    Convergent,
    CutProjectScheme,
    DegenerateSlopeError,
    PointSet,
    QuasiWord,
    approximant_word,
    convergents,
    golden_scheme,
    mechanical_word,
    periodic_word,
    points_from_word,
    scheme_from_slope,
    substitution_word,
    uniform_discreteness,
    with_phase,
)
from .transversal import (
    CylinderSet,
    ForbiddenWordError,
    IrreducibleGeneratorError,
    LabelModule,
    build_label_module,
    cylinder,
    empirical_frequency,
    membership,
    nearest_element,
    occurring_factors,
    product_module,
    stabilized_cylinder_module,
)
from .hamiltonian import (
    ApproximantOperator,
    ModelSpec,
    SeparableOperator2D,
    assemble_offdiagonal,
    assemble_onsite,
    dense_matrix,
    gershgorin_interval,
    kron_sum,
    sparse_listing,
)
from .spectrum import (
    Gap,
    SpectralData,
    detect_gaps,
    eigenvalues,
    ids,
    ids_2d,
    ids_curve,
    persistent_gap_pairs,
    phase_deviations,
    sturm_count,
    sturm_counts,
    sum_spectrum,
    transversal_average_ids,
    write_ids_csv,
)
from .gaplabel import (
    GapLabel,
    VerificationReport,
    bloch_control,
    label_gap,
    verify_conjecture,
    verify_conjecture_2d,
)
from .config import ConfigError, RunConfig

__version__ = "0.1.0"
