"""Immutable node-sampled fields."""
from __future__ import annotations

import numpy as np

from .grid import Grid


class Field:
    """Samples of a function on every node of ``grid``.

    ``values`` has shape ``component_shape + grid.shape``.  Arrays are copied
    on construction and frozen, so fields can be shared freely.
    """

    rank = 0

    def __init__(self, grid: Grid, values):
        arr = np.array(values, dtype=float, copy=True)
        expect = self.component_shape(grid) + grid.shape
        if arr.shape != expect:
            raise ValueError(f"{type(self).__name__} expects shape {expect}, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite")
        arr.setflags(write=False)
        self.grid = grid
        self.values = arr

    @classmethod
    def component_shape(cls, grid: Grid) -> tuple:
        return (grid.dim,) * cls.rank

    @classmethod
    def zeros(cls, grid: Grid):
        return cls(grid, np.zeros(cls.component_shape(grid) + grid.shape))

    @classmethod
    def from_function(cls, grid: Grid, fn):
        """Sample ``fn(*coords)``; vector fields expect a sequence of components."""
        x = grid.coords()
        vals = fn(*x)
        full = np.broadcast_to(np.asarray(vals, dtype=float), cls.component_shape(grid) + grid.shape)
        return cls(grid, full)

    @property
    def ncomp(self) -> int:
        return int(np.prod(self.component_shape(self.grid), dtype=int))

    def magnitude(self) -> np.ndarray:
        """Pointwise absolute value, Euclidean or Frobenius norm."""
        if self.rank == 0:
            return np.abs(self.values)
        flat = self.values.reshape((self.ncomp,) + self.grid.shape)
        return np.sqrt(np.sum(flat * flat, axis=0))

    def _like(self, values):
        return type(self)(self.grid, values)

    def _check(self, other):
        if not isinstance(other, Field):
            return None
        if other.grid != self.grid or other.rank != self.rank:
            raise ValueError("fields live on different grids or have different ranks")
        return other.values

    def __add__(self, other):
        v = self._check(other)
        return self._like(self.values + (other if v is None else v))

    __radd__ = __add__

    def __sub__(self, other):
        v = self._check(other)
        return self._like(self.values - (other if v is None else v))

    def __rsub__(self, other):
        return self._like(other - self.values)

    def __mul__(self, a):
        if isinstance(a, Field):
            return NotImplemented
        return self._like(self.values * a)

    __rmul__ = __mul__

    def __truediv__(self, a):
        return self._like(self.values / a)

    def __neg__(self):
        return self._like(-self.values)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.grid.dim}, n={self.grid.n})"


class ScalarField(Field):
    rank = 0


class VectorField(Field):
    rank = 1

    def component(self, a: int) -> ScalarField:
        return ScalarField(self.grid, self.values[a])

    def dot(self, vec) -> ScalarField:
        vec = np.asarray(vec, dtype=float)
        return ScalarField(self.grid, np.tensordot(vec, self.values, axes=(0, 0)))


class TensorField(Field):
    """Rank-two field; ``values[i, j]`` is read as d_j of component i."""

    rank = 2

    def contract(self, vec) -> VectorField:
        """Return T . vec, i.e. sum_j T[i, j] vec[j]."""
        vec = np.asarray(vec, dtype=float)
        return VectorField(self.grid, np.tensordot(vec, self.values, axes=(0, 1)))

    def trace(self) -> ScalarField:
        return ScalarField(self.grid, sum(self.values[a, a] for a in range(self.grid.dim)))


def field_like(grid: Grid, values: np.ndarray) -> Field:
    """Wrap an array in the field class matching its leading shape."""
    extra = values.ndim - grid.dim
    return {0: ScalarField, 1: VectorField, 2: TensorField}[extra](grid, values)
