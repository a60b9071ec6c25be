"""Deterministic synthetic inputs for the verification suites.

Every fixture is self-similar: it is a fixed profile F evaluated at
y = (x - h) / eps, so dimensionless ratios measured on it should not depend on
eps apart from discretization drift.  The profile parameters are drawn once
from the seed and shared by all eps.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core.diff import curl, gradient, perp_gradient
from ..core.fields import ScalarField, VectorField
from ..core.grid import Ball, BallGeometry, Grid
from ..cutoff import h_value


@dataclass(frozen=True)
class Profile:
    """exp(-|y - a|^2 / s^2) (1 + 0.4 sin(k . y + theta)) in the scaled variable y."""

    a: tuple
    k: tuple
    theta: float
    s: float = 1.5

    def __call__(self, y) -> np.ndarray:
        r2 = sum((yi - ai) ** 2 for yi, ai in zip(y, self.a))
        phase = sum(ki * yi for ki, yi in zip(self.k, y)) + self.theta
        return np.exp(-r2 / self.s**2) * (1.0 + 0.4 * np.sin(phase))


def _profiles(dim: int, seed: int, count: int) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        a = tuple(float(v) for v in rng.uniform(-0.5, 0.5, dim))
        k = tuple(float(v) for v in rng.normal(0.0, 1.0, dim))
        out.append(Profile(a, k, float(rng.uniform(0, 2 * np.pi))))
    return out


def scaled_coords(grid: Grid, ball: Ball) -> list:
    """Periodic offsets (x - h)/eps on the grid (minimum image)."""
    geo = BallGeometry(grid, ball)
    return [o * grid.spacing / ball.radius for o in geo.offsets]


def annulus_bump(y, a: float = 1.0, b: float = 2.0) -> np.ndarray:
    r = np.sqrt(sum(yi**2 for yi in y))
    t = (r - a) / (b - a)
    return np.where((t > 0) & (t < 1), np.sin(np.pi * np.clip(t, 0, 1)) ** 2, 0.0)


def bogovskii_sources(y) -> list:
    """Right-hand sides supported in the annulus 1 < |y| < 2 (scaled variable)."""
    Y0, Y1 = y[0], y[1]
    return [
        annulus_bump(y) * (Y0 + 0.3 * (Y1 * Y1 - Y0 * Y0)),
        annulus_bump(y, 1.25, 1.75) * (Y0 + 0.3 * (Y1 * Y1 - Y0 * Y0)),
        annulus_bump(y) * (Y0 * Y1 + 0.5 * Y1),
    ]


@dataclass
class FixtureSet:
    """All inputs of one eps."""

    ball: Ball
    scalars: list
    vectors: list
    divfree: list
    bogovskii: list
    potentials: list
    meta: dict = field(default_factory=dict)


def build_fixtures(grid: Grid, ball: Ball, seed: int) -> FixtureSet:
    dim = grid.dim
    ball.validate(grid)
    if not ball.padding_ok(grid):
        raise ValueError(
            f"fixture padding infeasible: |h| + 4 eps = {np.linalg.norm(ball.center) + 4 * ball.radius:.4g} "
            f"exceeds the half box {grid.L:g}"
        )
    eps = ball.radius
    y = scaled_coords(grid, ball)
    prof = _profiles(dim, seed, 2 + dim + 2)
    scalars = [ScalarField(grid, prof[0](y)), ScalarField(grid, prof[1](y))]
    vec = VectorField(grid, np.stack([np.broadcast_to(prof[2 + a](y), grid.shape) for a in range(dim)]))
    # divergence free (central stencil): perpendicular gradient / curl of eps * F
    stream = prof[2 + dim]
    if dim == 2:
        div_free = perp_gradient(ScalarField(grid, eps * stream(y)), "central")
    else:
        shifted = [Profile(stream.a, stream.k, stream.theta + a) for a in range(3)]
        pot = VectorField(grid, np.stack([eps * np.broadcast_to(p(y), grid.shape) for p in shifted]))
        div_free = curl(pot, "central")
    # plus a gradient part vanishing on B_{1.45 eps}: still divergence free on the ball
    ramp = h_value(np.sqrt(sum(yi**2 for yi in y)) - 1.2)
    chi = ScalarField(grid, eps * ramp * prof[3 + dim](y))
    mixed = div_free + gradient(chi, "central")
    sources = [ScalarField(grid, np.broadcast_to(f, grid.shape)) for f in bogovskii_sources(y)]
    # negative-norm potentials, zero on B_{1.45 eps}
    g = VectorField(grid, vec.values * ramp)
    r = ScalarField(grid, scalars[1].values * ramp)
    return FixtureSet(
        ball=ball,
        scalars=scalars,
        vectors=[vec],
        divfree=[div_free, mixed],
        bogovskii=sources,
        potentials=[g, r],
        meta={"seed": seed, "profiles": [p.__dict__ for p in prof]},
    )


def generate_inputs(config, seed: int | None = None) -> dict:
    """Fixture sets for every eps of ``config``, keyed by eps."""
    seed = config.seed if seed is None else seed
    grid = config.grid()
    return {eps: build_fixtures(grid, Ball(config.center_for(grid), eps), seed) for eps in config.eps}
