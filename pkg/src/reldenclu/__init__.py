"""Relative-density biclustering.

Finds subsets of observations over which subsets of features are related,
including non-linear relations, by comparing joint and marginal densities
over feature pairs and assembling the dense regions into biclusters.
"""

__version__ = "0.1.0"

from .assembly import run_reldenclu
from .core import (
    Bicluster,
    DataMatrix,
    DegenerateColumnError,
    DegenerateTestError,
    DenseRegionSet,
    InsufficientDataError,
    InvalidBiclusterError,
    MembershipMatrix,
    NoResultError,
    ParameterSet,
    ReldencluError,
    SeedBicluster,
    TooFewFeaturesError,
    ZeroSeparationError,
)
from .estimator import RelDenClu
from .normalize import UnitIntervalScaler

__all__ = [
    "Bicluster",
    "DataMatrix",
    "DegenerateColumnError",
    "DegenerateTestError",
    "DenseRegionSet",
    "InsufficientDataError",
    "InvalidBiclusterError",
    "MembershipMatrix",
    "NoResultError",
    "ParameterSet",
    "RelDenClu",
    "ReldencluError",
    "SeedBicluster",
    "TooFewFeaturesError",
    "UnitIntervalScaler",
    "ZeroSeparationError",
    "run_reldenclu",
]
