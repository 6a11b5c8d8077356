from .base import (
    KINDS,
    FittedLearner,
    LearnerSpec,
    fit_gbt_staged,
    fit_learner,
    predict,
    truncate_gbt,
)
from .superlearner import (
    PROFILES,
    SelectionReport,
    SuperLearnerConfig,
    cross_validated_predictions,
    default_library,
    default_v_folds,
    fit_discrete_super_learner,
)

__all__ = [
    "KINDS",
    "PROFILES",
    "FittedLearner",
    "LearnerSpec",
    "SelectionReport",
    "SuperLearnerConfig",
    "cross_validated_predictions",
    "default_library",
    "default_v_folds",
    "fit_discrete_super_learner",
    "fit_gbt_staged",
    "fit_learner",
    "predict",
    "truncate_gbt",
]
