"""Population-size estimation from sparse capture-recapture list data.

Poisson log-linear models over capture histories, with explicit handling of
list pairs that never overlap: their interaction parameters are maximized at
-infinity and removed before fitting, existence of the remaining estimate is
certified by a linear program, and uniqueness by a triangle check on the list
overlap graph.  Model choice is forward stepwise on Poisson tail p-values,
and confidence intervals come from a bias-corrected accelerated bootstrap of
the whole pipeline.
"""

from .bootstrap import (
    BootstrapResult,
    bca_interval,
    bootstrap_estimate,
    bootstrap_sample,
    weighted_jackknife,
)
from .datasets import BUILTIN_NAMES, builtin_dataset
from .errors import (
    DataFormatError,
    EstimabilityError,
    NonConvergenceError,
    NonexistentMLEError,
    UnidentifiableError,
)
from .estimability import (
    AllModelsAudit,
    EstimabilityReport,
    check_all_models,
    check_model,
    existence_lp,
    identifiability,
)
from .fitting import (
    FitResult,
    ModelSpec,
    ReducedProblem,
    fit,
    fit_table,
    fitted_marginal,
    reduce_problem,
)
from .histories import (
    CaptureDataset,
    ListPair,
    all_pairs,
    marginal_total,
    merge_lists,
    nonoverlapping_pairs,
    parse_dataset,
)
from .inference import (
    StepwiseStep,
    StepwiseTrail,
    estimate_population,
    p_value,
    stepwise,
    threshold_estimate,
)
from .rng import DEFAULT_SEED, substream
from .simulation import (
    SimulationBatch,
    ThresholdStudyResult,
    deviance_qq_study,
    estimate_over_thresholds,
    simulate_from_fit,
    threshold_study,
)

__version__ = "0.1.0"

__all__ = [
    "AllModelsAudit",
    "BUILTIN_NAMES",
    "BootstrapResult",
    "CaptureDataset",
    "DataFormatError",
    "DEFAULT_SEED",
    "EstimabilityError",
    "EstimabilityReport",
    "FitResult",
    "ListPair",
    "ModelSpec",
    "NonConvergenceError",
    "NonexistentMLEError",
    "ReducedProblem",
    "SimulationBatch",
    "StepwiseStep",
    "StepwiseTrail",
    "ThresholdStudyResult",
    "UnidentifiableError",
    "all_pairs",
    "bca_interval",
    "bootstrap_estimate",
    "bootstrap_sample",
    "builtin_dataset",
    "check_all_models",
    "check_model",
    "deviance_qq_study",
    "estimate_over_thresholds",
    "estimate_population",
    "existence_lp",
    "fit",
    "fit_table",
    "fitted_marginal",
    "identifiability",
    "marginal_total",
    "merge_lists",
    "nonoverlapping_pairs",
    "p_value",
    "parse_dataset",
    "reduce_problem",
    "simulate_from_fit",
    "stepwise",
    "substream",
    "threshold_estimate",
    "threshold_study",
    "weighted_jackknife",
]
