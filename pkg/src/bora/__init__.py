"""Budgeted resource allocation with Bayesian-optimization policies."""

from bora.errors import ConfigError, FitError
from bora.kernels import BACKEND
from bora.measures import (
    AllocationDecision,
    WeightVector,
    from_weight_vector,
    project_to_simplex,
    sample_uniform_simplex,
    to_weight_vector,
    wasserstein_p,
)

__version__ = "0.1.0"

__all__ = [
    "AllocationDecision",
    "BACKEND",
    "ConfigError",
    "FitError",
    "WeightVector",
    "from_weight_vector",
    "project_to_simplex",
    "sample_uniform_simplex",
    "to_weight_vector",
    "wasserstein_p",
]
