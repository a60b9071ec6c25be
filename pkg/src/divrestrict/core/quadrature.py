"""Ball averages: supersampled cell quadrature and an exact spectral variant."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import special

from .fields import Field
from .grid import Ball, BallGeometry, Grid

_SUB = np.array([-0.375, -0.125, 0.125, 0.375])


@lru_cache(maxsize=64)
def _cell_weights(dim: int, m: float, frac: tuple) -> tuple:
    """Volume fractions (in cells) of B_m(frac) on a local box of offsets.

    Returns (offsets per axis as int arrays, weight array).  Cells that cut
    the sphere are sampled at 4 points per axis.
    """
    R = int(np.ceil(m)) + 2
    ax = np.arange(-R, R + 1)
    d = np.stack(np.meshgrid(*[ax - frac[a] for a in range(dim)], indexing="ij"))
    near = np.sum(np.maximum(np.abs(d) - 0.5, 0.0) ** 2, axis=0)
    far = np.sum((np.abs(d) + 0.5) ** 2, axis=0)
    w = np.where(far <= m * m, 1.0, 0.0)
    cut = (near < m * m) & (far > m * m)
    if cut.any():
        sub = np.stack(np.meshgrid(*([_SUB] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
        pts = d[:, cut].T[:, None, :] + sub[None, :, :]
        w[cut] = np.mean(np.sum(pts * pts, axis=-1) <= m * m, axis=1)
    w.setflags(write=False)
    return ax, w


def _local_indices(grid: Grid, geo: BallGeometry, ax: np.ndarray) -> tuple:
    n = grid.n
    out = []
    for a, k in enumerate(geo.cell):
        i = (k + ax) % n
        out.append(i.reshape([-1 if a == b else 1 for b in range(grid.dim)]))
    return tuple(out)


def ball_mean(f: Field, ball: Ball, method: str = "quadrature"):
    """Average of ``f`` over the closed ball; a float or a component array."""
    grid = f.grid
    ball.validate(grid)
    if method == "spectral":
        return spectral_ball_mean(f, ball)
    if method != "quadrature":
        raise ValueError(f"unknown ball_mean method {method!r}")
    geo = BallGeometry(grid, ball)
    ax, w = _cell_weights(grid.dim, ball.radius / grid.spacing, geo.frac)
    idx = _local_indices(grid, geo, ax)
    comp = f.values.shape[: f.values.ndim - grid.dim]
    flat = f.values.reshape((-1,) + grid.shape)
    total = w.sum()
    # subtract the value nearest the center first: constants come out exact
    ref_idx = tuple(int(k) % grid.n for k in geo.cell)
    out = np.empty(flat.shape[0])
    for c in range(flat.shape[0]):
        local = flat[c][idx]
        ref = flat[c][ref_idx]
        out[c] = ref + np.sum(w * (local - ref)) / total
    if not comp:
        return float(out[0])
    return out.reshape(comp)


def ball_transform(k: np.ndarray, eps: float, dim: int) -> np.ndarray:
    """Integral of exp(i k.y) over |y| <= eps, as a function of |k|."""
    z = k * eps
    out = np.empty_like(z)
    small = z < 1e-6
    zz = np.where(small, 1.0, z)
    if dim == 2:
        out = np.where(small, np.pi * eps**2 * (1 - z**2 / 8), 2 * np.pi * eps**2 * special.j1(zz) / zz)
    else:
        vol = 4.0 / 3.0 * np.pi * eps**3
        out = np.where(
            small,
            vol * (1 - z**2 / 10),
            4 * np.pi * eps**3 * (np.sin(zz) - zz * np.cos(zz)) / zz**3,
        )
    return out


def ball_volume(eps: float, dim: int) -> float:
    return np.pi * eps**2 if dim == 2 else 4.0 / 3.0 * np.pi * eps**3


def spectral_ball_mean(f: Field, ball: Ball):
    """Exact ball average of the trigonometric interpolant of ``f``.

    Nyquist modes are dropped, matching the spectral derivative, so that the
    derivative of this mean in the center equals the mean of the spectral
    gradient.
    """
    grid = f.grid
    dim = grid.dim
    axes = tuple(range(-dim, 0))
    comp = f.values.shape[: f.values.ndim - dim]
    hat = np.fft.rfftn(f.values, axes=axes)
    ks = grid.wavenumbers()
    knorm = np.sqrt(sum(k * k for k in ks))
    phase = sum(k * (c + grid.L) for k, c in zip(ks, ball.center))
    mult = ball_transform(knorm, ball.radius, dim) * np.exp(1j * phase)
    nyq = np.zeros(knorm.shape, bool)
    for k in ks:
        nyq = nyq | np.isclose(np.abs(k), np.pi / grid.spacing)
    weight = np.full(knorm.shape[-1], 2.0)
    weight[0] = 1.0
    weight[-1] = 1.0
    mult = np.where(nyq, 0.0, mult * weight)
    vals = np.real(np.sum((hat * mult).reshape(comp + (-1,)), axis=-1))
    vals = vals / grid.size / ball_volume(ball.radius, dim)
    if not comp:
        return float(vals)
    return vals
