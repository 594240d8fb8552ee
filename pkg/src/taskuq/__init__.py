"""Loss-based uncertainty decomposition with task-aligned evaluation."""

from .core import Categorical, Dataset, SecondOrderEnsemble, SimplexError, UnsupportedOperation, model_average, validate_simplex
from .measures import UncertaintyTriple, batch_decompose, decompose, jensen_gap
from .scoring import BrierScore, LogScore, ScoringRule, ZeroOneScore, get_rule, register_rule

__version__ = "0.1.0"

__all__ = [
    "BrierScore",
    "Categorical",
    "Dataset",
    "LogScore",
    "ScoringRule",
    "SecondOrderEnsemble",
    "SimplexError",
    "UncertaintyTriple",
    "UnsupportedOperation",
    "ZeroOneScore",
    "batch_decompose",
    "decompose",
    "get_rule",
    "jensen_gap",
    "model_average",
    "register_rule",
    "validate_simplex",
]
