"""Minimum divergence estimation and testing for latent class models of binary data."""

from .divergence import HSpec, PhiSpec, identity_h, kl_divergence, phi_divergence, power
from .errors import (
    DomainError,
    InputFormatError,
    LcmdivError,
    NotConvergedError,
    RankDeficiencyError,
)
from .estimation import FitOptions, FitResult, fit, fit_mle, objective_and_gradient
from .inference import (
    NestedChain,
    NestedPair,
    TestResult,
    chi2_quantile,
    chi2_sf,
    gof_statistic,
    gof_statistic_h,
    nested_S,
    nested_S_h,
    nested_T,
    nested_T_h,
    sequential_selection,
)
from .montecarlo import SimulationPlan, SizePowerTable, dale_band, run_simulation
from .model import (
    LatentParams,
    ManifestDistribution,
    ModelDesign,
    ObservedCounts,
    Theta,
    class_weights,
    item_probs,
    log_likelihood,
    manifest_distribution,
    manifest_jacobian,
    pattern_index,
    pattern_vector,
    sample_counts,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "FitOptions",
    "FitResult",
    "HSpec",
    "InputFormatError",
    "LatentParams",
    "LcmdivError",
    "ManifestDistribution",
    "ModelDesign",
    "NestedChain",
    "NestedPair",
    "NotConvergedError",
    "ObservedCounts",
    "PhiSpec",
    "RankDeficiencyError",
    "SimulationPlan",
    "SizePowerTable",
    "TestResult",
    "Theta",
    "chi2_quantile",
    "chi2_sf",
    "class_weights",
    "dale_band",
    "fit",
    "fit_mle",
    "gof_statistic",
    "gof_statistic_h",
    "identity_h",
    "item_probs",
    "kl_divergence",
    "log_likelihood",
    "manifest_distribution",
    "manifest_jacobian",
    "nested_S",
    "nested_S_h",
    "nested_T",
    "nested_T_h",
    "objective_and_gradient",
    "pattern_index",
    "pattern_vector",
    "phi_divergence",
    "power",
    "run_simulation",
    "sample_counts",
    "sequential_selection",
]
