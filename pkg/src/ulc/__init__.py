"""Ultra-log-concave sequences, discrete degrees of freedom and Poisson extremality."""

from .extremal import (
    BoundaryMean,
    ExtremalResult,
    FamilyProfile,
    TruncExpFamily,
    family_profile,
    find_psi_zero,
    minimize_prob_at_mean,
    solve_mean,
    verify_h_nonneg,
)
from .freedom import (
    CertificationError,
    ConstraintSet,
    DofCertificate,
    Potential,
    SlopeSeq,
    breakpoints,
    certify_dof,
    is_extreme_candidate,
    perturbation_basis,
    slope_sequence,
)
from .oracle import (
    TrialConfig,
    TrialReport,
    property_suite,
    run_theorem_trials,
    sample_ulc,
    tilt_to_mean,
)
from .seqcore import (
    DiscreteInterval,
    LogConcavityReport,
    Pmf,
    Seq,
    convolve,
    is_ulc_finite,
    is_ulc_inf,
    mean,
    reference_pmf,
    tilt,
    validate_log_concave,
)

__version__ = "0.1.0"
