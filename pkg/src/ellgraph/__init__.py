"""Graph learning with elliptical distributions and graphical factor models.

Learns sparse conditional-dependency graphs by penalized maximum-likelihood
estimation of elliptical (Gaussian or Student) distributions, optionally
under a rank-k-plus-diagonal covariance constraint, solved with Riemannian
conjugate gradient on the SPD cone or on a quotient of factor
representatives.
"""

from .estimator import EllipticalGraphLearner
from .exceptions import (
    DegenerateData,
    DegenerateTruth,
    EllgraphError,
    LineSearchFailure,
    NonFiniteValue,
    NotPositiveDefinite,
    ParseError,
    RankDeficient,
    SolveFailure,
    TooFewRows,
    ZeroEdges,
)
from .objective import DataSet, DensityGenerator, PenaltyConfig
from .pipeline import (
    LearnResult,
    ModelConfig,
    conditional_correlation,
    learn,
    threshold_adjacency,
)
from .solver import CGConfig

__version__ = "0.1.0"

__all__ = [
    "EllipticalGraphLearner",
    "DataSet",
    "DensityGenerator",
    "PenaltyConfig",
    "CGConfig",
    "ModelConfig",
    "LearnResult",
    "learn",
    "conditional_correlation",
    "threshold_adjacency",
    "EllgraphError",
    "NotPositiveDefinite",
    "RankDeficient",
    "SolveFailure",
    "LineSearchFailure",
    "DegenerateData",
    "DegenerateTruth",
    "ZeroEdges",
    "ParseError",
    "NonFiniteValue",
    "TooFewRows",
    "__version__",
]
