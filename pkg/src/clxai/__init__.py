"""Co-learning game platform: a diet game judged by a trained classifier,
counterfactual explanations shaped by learner feedback, and log-based
measures of how much the explanations actually teach."""

__version__ = "0.1.0"

from .explainer import (
    Counterfactual,
    FeedbackConstraints,
    GuidanceSuggestion,
    Infeasible,
    brute_force_optimal,
    generate_counterfactual,
    guide_constraints,
)
from .predictor import TrainedModel, oracle_model, predict, train
from .world import WorldConfig, default_world, generate_dataset

__all__ = [
    "Counterfactual",
    "FeedbackConstraints",
    "GuidanceSuggestion",
    "Infeasible",
    "TrainedModel",
    "WorldConfig",
    "brute_force_optimal",
    "default_world",
    "generate_counterfactual",
    "generate_dataset",
    "guide_constraints",
    "oracle_model",
    "predict",
    "train",
    "__version__",
]
