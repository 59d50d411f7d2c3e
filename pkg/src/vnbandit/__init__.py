"""Stochastic convex bandits with vanishing noise: online Newton solvers,
smoothing-surrogate estimators, and a verification harness."""

from .geometry import ConvexBody
from .extension import ExtendedLoss, learner_feedback
from .environment import Environment, LossSpec, NoiseSpec, PairwiseDifferenceEnvironment
from .estimator import IterateDistribution, density_ratio, estimate_pair
from .solver import (
    BetaEll,
    BetaOne,
    ConstantSchedule,
    QG,
    practical_constants,
    run,
    theoretical_constants,
)

__version__ = "0.1.0"

__all__ = [
    "ConvexBody",
    "ExtendedLoss",
    "learner_feedback",
    "Environment",
    "LossSpec",
    "NoiseSpec",
    "PairwiseDifferenceEnvironment",
    "IterateDistribution",
    "density_ratio",
    "estimate_pair",
    "QG",
    "BetaEll",
    "BetaOne",
    "ConstantSchedule",
    "theoretical_constants",
    "practical_constants",
    "run",
    "__version__",
]
