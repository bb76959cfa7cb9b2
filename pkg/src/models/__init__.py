"""
Models package - Data models for datasets, spline bases, function spaces and chains.

This package provides the core models:
- Dataset and covariate rescaling
- Clamped B-spline bases and difference penalties
- Hill and power function spaces with their Jacobians and projections
- MCMC state and stored posterior draws
"""

from .dataset import Dataset, CovariateScaling
from .basis import KnotVector, SplineBasis, PenaltyMatrix, make_knots, design_matrix, difference_penalty
from .function_spaces import (
    FunctionSpace,
    HillParams,
    PowerParams,
    ParameterPrior,
    ProjectionOperator,
    SpaceKind,
    combined_jacobian,
    hill_jacobian,
    hill_mean,
    power_jacobian,
    power_mean,
    projection,
)
from .chain import ChainDraws, CurveKind, CurveModel, McmcState

__all__ = [
    # Data
    "Dataset",
    "CovariateScaling",
    # Spline basis
    "KnotVector",
    "SplineBasis",
    "PenaltyMatrix",
    "make_knots",
    "design_matrix",
    "difference_penalty",
    # Function spaces
    "FunctionSpace",
    "HillParams",
    "PowerParams",
    "ParameterPrior",
    "ProjectionOperator",
    "SpaceKind",
    "combined_jacobian",
    "hill_jacobian",
    "hill_mean",
    "power_jacobian",
    "power_mean",
    "projection",
    # Chains
    "ChainDraws",
    "CurveKind",
    "CurveModel",
    "McmcState",
]
