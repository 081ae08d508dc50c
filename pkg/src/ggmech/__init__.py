"""Generalized-Gaussian mechanisms for differentially private releases."""

from ._version import __version__
from .analysis import (
    TailCurvePoint,
    gaussian_tail,
    kl_divergence,
    l1_distance,
    laplace_tail,
    tail_ratio_curve,
    variance_comparison,
)
from .calibration import (
    CalibrationResult,
    McConfig,
    PrivacyParams,
    disjoint_pdp_scale,
    equivalent_epsilon,
    gauss_adp_sigma,
    gauss_pdp_sigma,
    gg_pdp_scale_mc,
    laplace_scale,
    tgg_scale,
)
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DomainError,
    GGMechError,
    IngestionError,
    NoSolutionError,
    OutputError,
)
from .ggdist import GGParams, gg_cdf, gg_pdf, gg_sample, gg_truncated_sample
from .mechanisms import (
    MechanismSpec,
    SanitizedResult,
    audit_privacy_loss,
    calibrate,
    clamp,
    normalize_to_total,
    round_counts,
    sanitize,
)
from .numerics import RngStream
from .pipeline import (
    ExperimentConfig,
    ExperimentReport,
    Histogram,
    emit_curve,
    emit_report,
    load_histogram,
    run_experiment,
    synth_dataset,
)
from .sensitivity import SensitivityProfile, effective_lp_gs, utility_sensitivity
