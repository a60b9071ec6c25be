"""FFT inverse Laplacian and the Riesz-type operators built on it.

Sign convention: ``inv_laplacian`` is the true inverse, so Laplacian(u) = f
minus its projection onto the Laplacian's null space.  That null space is the
constants for band-limited data; with Nyquist-free spectral symbols or central
symbols it is spanned by the 2^d parity modes (-1)^(j . P), P in {0,1}^d.
"""
from __future__ import annotations

from itertools import product

import numpy as np

from .core.diff import lp_norm, spectral_symbols
from .core.fields import ScalarField, TensorField, VectorField
from .core.grid import Ball, BallGeometry, Grid
from .cutoff import h_value

SINK_START = 2.0


class SpectralSolver:
    """Fourier multipliers on one grid; ``scheme`` picks the derivative symbol.

    "spectral": i k with the Nyquist mode zeroed.
    "central": i sin(k h)/h, the symbol of the two-point central difference,
    so outputs are consistent with the stencil divergence used elsewhere.
    """

    def __init__(self, grid: Grid, scheme: str = "spectral"):
        self.grid = grid
        self.scheme = scheme
        if scheme == "spectral":
            sym = list(spectral_symbols(grid))
        elif scheme == "central":
            h = grid.spacing
            sym = [1j * np.sin(k * h) / h for k in grid.wavenumbers()]
        else:
            raise ValueError(f"unknown scheme {scheme!r}")
        self.symbols = tuple(sym)
        lam = sum((s * s).real for s in sym)
        null = np.abs(lam) < 1e-12 * np.abs(lam).max()
        inv = np.where(null, 0.0, 1.0 / np.where(null, 1.0, lam))
        self.laplace_symbol = lam
        self.inverse_symbol = inv
        self.null_modes = int(null.sum())

    # transforms -------------------------------------------------------
    def _fwd(self, values):
        return np.fft.rfftn(values, axes=tuple(range(-self.grid.dim, 0)))

    def _inv(self, values):
        return np.fft.irfftn(values, s=self.grid.shape, axes=tuple(range(-self.grid.dim, 0)))

    def _prepare(self, f: ScalarField, sink: Ball | None):
        if f.grid != self.grid:
            raise ValueError("field lives on a different grid")
        vals = f.values if sink is None else compensate(f, sink).values
        return self._fwd(vals)

    # operators --------------------------------------------------------
    def inv_laplacian(self, f: ScalarField, sink: Ball | None = None) -> ScalarField:
        """Zero-mean u with Laplacian(u) = f - (null-space part of f).

        With ``sink`` the null-space part is removed by a smooth far-field
        sink that vanishes on B_{9/4 eps}, instead of a uniform shift.
        """
        return ScalarField(self.grid, self._inv(self.inverse_symbol * self._prepare(f, sink)))

    def grad_inv_laplacian(self, f: ScalarField, sink: Ball | None = None) -> VectorField:
        fh = self.inverse_symbol * self._prepare(f, sink)
        return VectorField(self.grid, np.stack([self._inv(s * fh) for s in self.symbols]))

    def hessian_inv_laplacian(self, f: ScalarField, sink: Ball | None = None) -> TensorField:
        """T[i, j] = d_i d_j Laplacian^{-1} f; its trace is f minus the null-space part."""
        fh = self.inverse_symbol * self._prepare(f, sink)
        d = self.grid.dim
        out = np.empty((d, d) + self.grid.shape)
        for i in range(d):
            for j in range(i, d):
                out[i, j] = self._inv(self.symbols[i] * self.symbols[j] * fh)
                out[j, i] = out[i, j]
        return TensorField(self.grid, out)

    def divergence(self, v: VectorField) -> ScalarField:
        vh = self._fwd(v.values)
        return ScalarField(self.grid, self._inv(sum(s * vh[a] for a, s in enumerate(self.symbols))))

    def riesz_right_inverse(self, g: VectorField) -> VectorField:
        """grad Laplacian^{-1} div g: the gradient part of g, a right inverse of div on div g."""
        if g.grid != self.grid:
            raise ValueError("field lives on a different grid")
        gh = self._fwd(g.values)
        div = sum(s * gh[a] for a, s in enumerate(self.symbols)) * self.inverse_symbol
        return VectorField(self.grid, np.stack([self._inv(s * div) for s in self.symbols]))

    def elliptic_bound_report(self, b: ScalarField, p: float, q_values=(2.0, 3.0, np.inf)) -> dict:
        """|grad grad Lap^{-1} b|_p / |b|_p and the L^q norms of grad Lap^{-1} b."""
        nb = lp_norm(b, p)
        if nb == 0.0:
            raise ValueError("elliptic bound undefined for a zero field")
        hess = self.hessian_inv_laplacian(b)
        grad = self.grad_inv_laplacian(b)
        return {
            "p": p,
            "b_norm": nb,
            "hessian_ratio": lp_norm(hess, p) / nb,
            "grad_norms": {q: lp_norm(grad, q) for q in q_values},
        }


def parity_classes(grid: Grid):
    """Boolean masks of the 2^d node classes j mod 2 = q."""
    idx = [np.arange(grid.n) % 2 for _ in range(grid.dim)]
    out = []
    for q in product((0, 1), repeat=grid.dim):
        m = np.ones(grid.shape, bool)
        for a in range(grid.dim):
            shape = [1] * grid.dim
            shape[a] = grid.n
            m = m & (idx[a] == q[a]).reshape(shape)
        out.append(m)
    return out


def sink_weight(grid: Grid, ball: Ball) -> np.ndarray:
    """Far-field weight: 0 on |x-h| <= 9/4 eps, 1 beyond 11/4 eps."""
    rho = BallGeometry(grid, ball).rho
    return h_value(rho - SINK_START)


def compensate(f: ScalarField, ball: Ball) -> ScalarField:
    """Remove the null-space part of ``f`` using a sink supported away from the ball.

    Each parity class sum of the result is zero, so the result is in the
    range of both the spectral and the central Laplacian, and it equals f on
    B_{9/4 eps}.
    """
    grid = f.grid
    w = sink_weight(grid, ball)
    out = f.values.copy()
    for m in parity_classes(grid):
        wm = np.where(m, w, 0.0)
        out = out - (np.sum(f.values[m]) / np.sum(wm)) * wm
    return ScalarField(grid, out)
