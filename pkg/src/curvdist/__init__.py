"""Curvature-corrected approximations of pairwise geodesic distances."""

from .landmarks import GaussianKernel, LandmarkChart, LandmarkConfig, landmark_chart
from .manifold import (
    ConvergenceError,
    DomainError,
    GeodesicSolverConfig,
    GeometryError,
    MetricError,
    bvp_counter,
    curvature_tensor,
    exp,
    log,
    sectional_curvature,
)
from .model_spaces import approx_distance, cc_distance, summarize_pair
from .pipeline import Dataset, DistanceMatrix, approx_distance_matrix, exact_distance_matrix, karcher_mean, register

__all__ = [
    "ConvergenceError",
    "Dataset",
    "DistanceMatrix",
    "DomainError",
    "GaussianKernel",
    "GeodesicSolverConfig",
    "GeometryError",
    "LandmarkChart",
    "LandmarkConfig",
    "MetricError",
    "approx_distance",
    "approx_distance_matrix",
    "bvp_counter",
    "cc_distance",
    "curvature_tensor",
    "exact_distance_matrix",
    "exp",
    "karcher_mean",
    "landmark_chart",
    "log",
    "register",
    "sectional_curvature",
    "summarize_pair",
]
