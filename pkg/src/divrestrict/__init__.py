"""Cutoff and divergence-preserving restriction operators near a small ball, with an eps-sweep harness."""
from .core import Ball, Grid, ScalarField, TensorField, VectorField, ball_mean, lp_norm
from .errors import CompatibilityError, DegenerateRegionError, SolverError, UnderResolvedError

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "CompatibilityError",
    "DegenerateRegionError",
    "Grid",
    "ScalarField",
    "SolverError",
    "TensorField",
    "UnderResolvedError",
    "VectorField",
    "ball_mean",
    "lp_norm",
]
