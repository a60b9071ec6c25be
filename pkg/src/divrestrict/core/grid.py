"""Periodic Cartesian grids and the ball geometry attached to them."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import UnderResolvedError

#: minimum ball radius, in grid cells
RESOLUTION_FLOOR = 4.0


@dataclass(frozen=True)
class Grid:
    """Uniform periodic sampling of the box [-L, L)^d.

    Node ``i`` along an axis sits at ``-L + i * spacing``, so the origin is
    node ``n // 2``.
    """

    dim: int
    n: int
    L: float = 1.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 32 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 32, got {self.n}")
        if not self.L > 0:
            raise ValueError("L must be positive")
        object.__setattr__(self, "L", float(self.L))

    periodic = True

    @property
    def spacing(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dim

    @property
    def size(self) -> int:
        return self.n**self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def volume(self) -> float:
        return (2.0 * self.L) ** self.dim

    def axis(self) -> np.ndarray:
        return -self.L + self.spacing * np.arange(self.n)

    def coords(self) -> list:
        """Open meshgrid of node coordinates, one broadcastable array per axis."""
        ax = self.axis()
        out = []
        for a in range(self.dim):
            shape = [1] * self.dim
            shape[a] = self.n
            out.append(ax.reshape(shape))
        return out

    def wavenumbers(self) -> list:
        """Angular wavenumbers for an rfftn layout, broadcastable per axis."""
        out = []
        for a in range(self.dim):
            if a == self.dim - 1:
                m = np.arange(self.n // 2 + 1, dtype=float)
            else:
                m = np.fft.fftfreq(self.n, 1.0 / self.n)
            shape = [1] * self.dim
            shape[a] = m.size
            out.append((np.pi / self.L) * m.reshape(shape))
        return out

    def to_dict(self) -> dict:
        return {"dim": self.dim, "n": self.n, "L": self.L}


@dataclass(frozen=True)
class Ball:
    """The rigid body: closed ball of radius ``radius`` about ``center``."""

    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def eps(self) -> float:
        return self.radius

    def shifted(self, delta) -> "Ball":
        return Ball(tuple(c + d for c, d in zip(self.center, delta)), self.radius)

    def validate(self, grid: Grid) -> None:
        """Check dimension and resolution floor.  Padding is only flagged, see padding_ok."""
        if len(self.center) != grid.dim:
            raise ValueError(f"ball center has {len(self.center)} coordinates, grid is {grid.dim}-d")
        if self.radius < RESOLUTION_FLOOR * grid.spacing * (1 - 1e-12):
            raise UnderResolvedError(
                f"ball radius {self.radius:g} spans {self.radius / grid.spacing:.2f} cells, "
                f"need at least {RESOLUTION_FLOOR:g}"
            )

    def padding_ok(self, grid: Grid) -> bool:
        """True when B_2eps keeps a 2 eps margin from the box faces."""
        return all(abs(c) + 4 * self.radius <= grid.L * (1 + 1e-12) for c in self.center)


class BallGeometry:
    """Distances of every node to a ball center, computed from index offsets.

    Working in index units keeps grid-aligned translations exact: moving the
    center by whole cells permutes every derived array bit for bit.
    """

    def __init__(self, grid: Grid, ball: Ball):
        self.grid = grid
        self.ball = ball
        h = grid.spacing
        ci = [(c + grid.L) / h for c in ball.center]
        # split the center into a whole-cell part and a fraction snapped to a
        # 2^-32 lattice, so centers that differ by whole cells share a fraction
        self.cell = tuple(int(np.round(c)) for c in ci)
        self.frac = tuple(float(np.round((c - k) * 2.0**32) / 2.0**32) for c, k in zip(ci, self.cell))

    @cached_property
    def offsets(self) -> list:
        """Per-axis node offsets (i - c) in cells, periodically wrapped."""
        n = self.grid.n
        out = []
        for a, (k, f) in enumerate(zip(self.cell, self.frac)):
            m = (np.arange(n) - k + n // 2) % n - n // 2
            shape = [1] * self.grid.dim
            shape[a] = n
            out.append((m - f).reshape(shape))
        return out

    @cached_property
    def s(self) -> np.ndarray:
        """Squared distance in cell units."""
        tot = np.zeros(self.grid.shape)
        for d in self.offsets:
            tot = tot + d * d
        return tot

    @cached_property
    def r(self) -> np.ndarray:
        return self.grid.spacing * np.sqrt(self.s)

    @cached_property
    def rho(self) -> np.ndarray:
        """Distance measured in ball radii."""
        return self.r / self.ball.radius

    @cached_property
    def normal(self) -> np.ndarray:
        """Unit radial direction (x - h)/|x - h|, set to zero at the center."""
        root = np.sqrt(self.s)
        safe = np.where(root > 0, root, 1.0)
        return np.stack([np.where(root > 0, d / safe, 0.0) for d in self.offsets])

    def region_mask(self, region) -> np.ndarray:
        """Boolean node mask for a named region relative to the ball."""
        rho = self.rho
        if isinstance(region, np.ndarray):
            return region.astype(bool)
        if region == "whole":
            return np.ones(self.grid.shape, bool)
        if region == "ball":
            return rho <= 1.0
        if region == "annulus":
            return (rho > 1.0) & (rho < 2.0)
        if region == "complement":
            return rho > 1.0
        if isinstance(region, tuple):
            kind = region[0]
            if kind == "ball":
                return rho <= region[1]
            if kind == "shell":
                return (rho >= region[1]) & (rho <= region[2])
            if kind == "outside":
                return rho >= region[1]
        raise ValueError(f"unknown region {region!r}")
