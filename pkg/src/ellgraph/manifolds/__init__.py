"""Riemannian geometries used by the solvers."""

from .spd import SPDManifold
from .factor import (
    FactorManifold,
    FactorPoint,
    FactorTangent,
    pullback_euclidean_gradient,
)

__all__ = [
    "SPDManifold",
    "FactorManifold",
    "FactorPoint",
    "FactorTangent",
    "pullback_euclidean_gradient",
]
