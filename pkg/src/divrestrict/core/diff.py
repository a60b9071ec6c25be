"""Differential operators and L^p norms on periodic grids."""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..errors import DegenerateRegionError
from .fields import Field, ScalarField, TensorField, VectorField
from .grid import Ball, BallGeometry, Grid

SCHEMES = ("spectral", "central", "forward")


@lru_cache(maxsize=16)
def spectral_symbols(grid: Grid) -> tuple:
    """Per-axis first-derivative symbols ik on the rfftn layout.

    The Nyquist wavenumber has no real odd partner, so it is zeroed; the
    Laplacian is built from the same symbols, which makes div(grad) equal
    the Laplacian for every input, not only band-limited ones.
    """
    out = []
    for a, k in enumerate(grid.wavenumbers()):
        k = k.copy()
        nyq = np.isclose(np.abs(k), np.pi / grid.spacing)
        k[nyq] = 0.0
        out.append(1j * k)
    return tuple(out)


def _rfft(values, grid):
    axes = tuple(range(-grid.dim, 0))
    return np.fft.rfftn(values, axes=axes)


def _irfft(values, grid):
    axes = tuple(range(-grid.dim, 0))
    return np.fft.irfftn(values, s=grid.shape, axes=axes)


def _partial(values: np.ndarray, grid: Grid, axis: int, scheme: str) -> np.ndarray:
    """d/dx_axis of an array whose trailing dims are the grid."""
    h = grid.spacing
    ax = values.ndim - grid.dim + axis
    if scheme == "central":
        return (np.roll(values, -1, ax) - np.roll(values, 1, ax)) / (2.0 * h)
    if scheme == "forward":
        return (np.roll(values, -1, ax) - values) / h
    if scheme == "spectral":
        sym = spectral_symbols(grid)[axis]
        return _irfft(sym * _rfft(values, grid), grid)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def gradient(f: ScalarField, scheme: str = "spectral") -> VectorField:
    g = f.grid
    return VectorField(g, np.stack([_partial(f.values, g, a, scheme) for a in range(g.dim)]))


def jacobian(v: VectorField, scheme: str = "spectral") -> TensorField:
    """T[i, j] = d_j v_i."""
    g = v.grid
    return TensorField(g, np.stack([_partial(v.values, g, a, scheme) for a in range(g.dim)], axis=1))


def divergence(v: VectorField, scheme: str = "spectral") -> ScalarField:
    g = v.grid
    if scheme == "spectral":
        hat = _rfft(v.values, g)
        syms = spectral_symbols(g)
        return ScalarField(g, _irfft(sum(syms[a] * hat[a] for a in range(g.dim)), g))
    return ScalarField(g, sum(_partial(v.values[a], g, a, scheme) for a in range(g.dim)))


def laplacian(f: ScalarField, scheme: str = "spectral") -> ScalarField:
    g = f.grid
    if scheme == "spectral":
        syms = spectral_symbols(g)
        return ScalarField(g, _irfft(sum(s * s for s in syms) * _rfft(f.values, g), g))
    if scheme == "central":
        # compact 5/7-point stencil
        h2 = g.spacing**2
        v = f.values
        out = -2.0 * g.dim * v
        for a in range(g.dim):
            out = out + np.roll(v, 1, a) + np.roll(v, -1, a)
        return ScalarField(g, out / h2)
    raise ValueError(f"laplacian has no {scheme!r} scheme")


def region_mask(grid: Grid, region, ball: Ball | None = None) -> np.ndarray:
    if isinstance(region, np.ndarray):
        return region.astype(bool)
    if region == "whole":
        return np.ones(grid.shape, bool)
    if ball is None:
        raise ValueError(f"region {region!r} needs a ball")
    return BallGeometry(grid, ball).region_mask(region)


def lp_norm(f: Field, p: float, region="whole", ball: Ball | None = None) -> float:
    """Midpoint-rule L^p norm over the nodes of ``region``.

    ``region`` is "whole", "ball", "annulus", "complement", ("ball", a) for
    |x-h| <= a eps, ("shell", a, b) for a eps <= |x-h| <= b eps, or a node mask.
    """
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    mask = region_mask(f.grid, region, ball)
    if not mask.any():
        raise DegenerateRegionError("degenerate region: no grid nodes selected")
    mag = f.magnitude()[mask]
    if np.isinf(p):
        return float(mag.max())
    scale = mag.max()
    if scale == 0.0:
        return 0.0
    # scale out the maximum so large p does not overflow
    return float(scale * (np.sum((mag / scale) ** p) * f.grid.cell_volume) ** (1.0 / p))


def perp_gradient(f: ScalarField, scheme: str = "central") -> VectorField:
    """(-d_2 f, d_1 f): divergence free for the matching divergence scheme."""
    if f.grid.dim != 2:
        raise ValueError("perpendicular gradient is two-dimensional")
    g = f.grid
    return VectorField(g, np.stack([-_partial(f.values, g, 1, scheme), _partial(f.values, g, 0, scheme)]))


def curl(a: VectorField, scheme: str = "central") -> VectorField:
    """Curl of a 3-d vector potential; divergence free for the matching scheme."""
    if a.grid.dim != 3:
        raise ValueError("curl is three-dimensional")
    g = a.grid
    d = lambda i, j: _partial(a.values[i], g, j, scheme)  # noqa: E731
    return VectorField(g, np.stack([d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)]))
