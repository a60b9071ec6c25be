from .diff import curl, divergence, gradient, jacobian, laplacian, lp_norm, perp_gradient
from .fields import Field, ScalarField, TensorField, VectorField, field_like
from .grid import Ball, BallGeometry, Grid
from .quadrature import ball_mean, spectral_ball_mean
from .snapshot import load_field, save_field

__all__ = [
    "Ball",
    "BallGeometry",
    "Field",
    "Grid",
    "ScalarField",
    "TensorField",
    "VectorField",
    "ball_mean",
    "curl",
    "divergence",
    "field_like",
    "gradient",
    "jacobian",
    "laplacian",
    "load_field",
    "lp_norm",
    "perp_gradient",
    "save_field",
    "spectral_ball_mean",
]
