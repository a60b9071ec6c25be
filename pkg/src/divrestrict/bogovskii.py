"""Discrete Bogovskii operator on the annulus eps < |x - h| < 2 eps.

Given f, find v supported on the active nodes (strictly inside the annulus)
with central-difference divergence D v = f, minimizing the Dirichlet energy
|grad v|^2.  The saddle-point system

    [ A   Dk^T ] [ v ]   [ 0  ]
    [ Dk  0    ] [ l ] = [ fk ]

is factorized once per (dimension, eps/h, sub-cell center offset) and reused.
D^T has a kernel made of one indicator per connected constraint component
(2^d parity classes); one constraint row per component is dropped, which is
the discrete counterpart of pinning the multiplier's mean.
"""
from __future__ import annotations

import logging
import time
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .core.diff import lp_norm
from .core.fields import ScalarField, VectorField
from .core.grid import Ball, BallGeometry, Grid
from .errors import SolverError, UnderResolvedError

log = logging.getLogger(__name__)

#: minimum annulus gap (eps) in grid cells
GAP_FLOOR = 8.0
INSET = 0.2
RESIDUAL_TOL = 1e-8
DEFAULT_Q = (1.5, 2.0, 3.0)
_CACHE_SIZE = 2


@dataclass
class _Factor:
    """Unit-spacing annulus system on a local box, shared across grids."""

    radius: int
    active: np.ndarray  # local boolean masks
    reach: np.ndarray
    A: sp.csr_matrix  # energy (vector Dirichlet Laplacian)
    D: sp.csr_matrix  # unit central divergence: reach <- active components
    keep: np.ndarray
    labels: np.ndarray
    ncomp: int
    lu: object
    stats: dict


_factors: "OrderedDict[tuple, _Factor]" = OrderedDict()


def clear_cache() -> None:
    _factors.clear()


def _dirichlet_laplacian(active: np.ndarray) -> sp.csr_matrix:
    """Unit-spacing 2d+1 point Laplacian on active nodes, zero outside."""
    dim = active.ndim
    aid = -np.ones(active.shape, int)
    aid[active] = np.arange(active.sum())
    idx = np.argwhere(active)
    ia = aid[active]
    na = ia.size
    rows, cols, vals = [ia], [ia], [2.0 * dim * np.ones(na)]
    for a in range(dim):
        for sgn in (1, -1):
            nb = idx.copy()
            nb[:, a] += sgn
            nid = aid[tuple(nb.T)]
            ok = nid >= 0
            rows.append(ia[ok])
            cols.append(nid[ok])
            vals.append(-np.ones(ok.sum()))
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(na, na))


def _assemble(dim: int, m: float, frac: tuple) -> _Factor:
    R = int(np.ceil(2 * m)) + 2
    ax = np.arange(-R, R + 1)
    # same arithmetic as BallGeometry, so masks agree bit for bit
    s = np.zeros((ax.size,) * dim)
    for a in range(dim):
        shape = [1] * dim
        shape[a] = ax.size
        d = (ax - frac[a]).reshape(shape)
        s = s + d * d
    root = np.sqrt(s)
    active = (root > m + INSET) & (root < 2 * m - INSET)
    reach = active.copy()
    for a in range(dim):
        reach |= np.roll(active, 1, a) | np.roll(active, -1, a)
    shape = active.shape
    aid = -np.ones(shape, int)
    aid[active] = np.arange(active.sum())
    rid = -np.ones(shape, int)
    rid[reach] = np.arange(reach.sum())
    na, nr = int(active.sum()), int(reach.sum())
    idx = np.argwhere(active)
    ia = aid[active]

    A = sp.block_diag([_dirichlet_laplacian(active)] * dim, format="csr")

    rows, cols, vals = [], [], []
    for a in range(dim):
        for sgn in (1, -1):
            nb = idx.copy()
            nb[:, a] += sgn
            # (div v)(q) = (v_a(q + e_a) - v_a(q - e_a)) / 2, so node j + sgn e_a gets -sgn v_a(j) / 2
            rows.append(rid[tuple(nb.T)])
            cols.append(ia + a * na)
            vals.append(-0.5 * sgn * np.ones(na))
    D = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nr, dim * na))

    ncomp, labels = connected_components(abs(D) @ abs(D).T, directed=False)
    keep = np.ones(nr, bool)
    for c in range(ncomp):
        keep[np.flatnonzero(labels == c)[0]] = False
    K = sp.bmat([[A, D[keep].T], [D[keep], None]], format="csc")
    t0 = time.perf_counter()
    try:
        lu = spla.splu(K, permc_spec="COLAMD")
    except RuntimeError as exc:  # exactly singular
        raise SolverError(f"annulus saddle-point system is singular: {exc}") from exc
    stats = {
        "size": int(K.shape[0]),
        "nnz": int(K.nnz),
        "factor_nnz": int(lu.L.nnz + lu.U.nnz),
        "factor_seconds": time.perf_counter() - t0,
        "active_nodes": na,
        "constraint_nodes": nr,
        "components": int(ncomp),
    }
    log.info("annulus system dim=%d eps=%.3g cells: %s", dim, m, stats)
    return _Factor(R, active, reach, A, D, keep, labels, ncomp, lu, stats)


def _factor(dim: int, m: float, frac: tuple) -> _Factor:
    key = (dim, m, frac)
    if key in _factors:
        _factors.move_to_end(key)
        return _factors[key]
    while len(_factors) >= _CACHE_SIZE:
        _factors.popitem(last=False)
    fac = _assemble(dim, m, frac)
    _factors[key] = fac
    return fac


class AnnulusProblem:
    """Bogovskii problem on B_2eps(h) minus B_eps(h) for one grid and ball."""

    def __init__(self, grid: Grid, ball: Ball):
        ball.validate(grid)
        m = ball.radius / grid.spacing
        if m < GAP_FLOOR * (1 - 1e-12):
            raise UnderResolvedError(
                f"annulus gap spans {m:.2f} cells, need at least {GAP_FLOOR:g}"
            )
        self.grid = grid
        self.ball = ball
        geo = BallGeometry(grid, ball)
        self.factor = _factor(grid.dim, m, geo.frac)
        R = self.factor.radius
        ax = np.arange(-R, R + 1)
        self._index = tuple(
            ((k + ax) % grid.n).reshape([-1 if a == b else 1 for b in range(grid.dim)])
            for a, k in enumerate(geo.cell)
        )
        # global masks
        self.active = np.zeros(grid.shape, bool)
        self.active[self._index] = self.factor.active
        self.reach = np.zeros(grid.shape, bool)
        self.reach[self._index] = self.factor.reach

    @property
    def stats(self) -> dict:
        return dict(self.factor.stats)

    def _local(self, values: np.ndarray) -> np.ndarray:
        return values[(Ellipsis,) + self._index]

    def divergence(self, v: VectorField) -> ScalarField:
        """Central divergence (same stencil as the constraint)."""
        g = self.grid
        out = sum((np.roll(v.values[a], -1, a) - np.roll(v.values[a], 1, a)) for a in range(g.dim))
        return ScalarField(g, out / (2.0 * g.spacing))

    def component_sums(self, f: np.ndarray) -> np.ndarray:
        """Sum of ``f`` over each constraint component (on the reach set)."""
        loc = self._local(f)[self.factor.reach]
        return np.bincount(self.factor.labels, weights=loc, minlength=self.factor.ncomp)

    def component_sizes(self) -> np.ndarray:
        return np.bincount(self.factor.labels, minlength=self.factor.ncomp).astype(float)


@dataclass
class BogovskiiSolution:
    v: VectorField
    residual: float
    projection: float
    leakage: float
    stats: dict = field(default_factory=dict)


def solve_bogovskii(problem: AnnulusProblem, f: ScalarField, support: str = "active",
                    full_output: bool = False):
    """Solve div v = f on the annulus with v = 0 off the active nodes.

    ``support="active"`` keeps f on active nodes only and projects out its
    mean per constraint component (over active nodes).  ``support="reach"``
    uses f on every constraint node; that is what a compatible right-hand
    side D(phi - E phi) needs.  Returns v, or a BogovskiiSolution with
    ``full_output``.
    """
    grid = problem.grid
    if f.grid != grid:
        raise ValueError("field lives on a different grid")
    fac = problem.factor
    mask = problem.active if support == "active" else problem.reach
    if support not in ("active", "reach"):
        raise ValueError(f"unknown support {support!r}")
    leak = float(np.abs(np.where(mask, 0.0, f.values)).max())
    rhs = problem._local(np.where(mask, f.values, 0.0))[fac.reach]
    loc_mask = (fac.active if support == "active" else fac.reach)[fac.reach]
    counts = np.bincount(fac.labels, weights=loc_mask.astype(float), minlength=fac.ncomp)
    means = np.bincount(fac.labels, weights=rhs, minlength=fac.ncomp) / counts
    proj = np.where(loc_mask, means[fac.labels], 0.0)
    rhs = rhs - proj
    fnorm = float(np.linalg.norm(rhs))
    projection = float(np.linalg.norm(proj)) / max(fnorm + float(np.linalg.norm(proj)), 1e-300)

    dim = grid.dim
    na = fac.stats["active_nodes"]
    out = np.zeros((dim,) + grid.shape)
    if fnorm == 0.0:
        sol = np.zeros(dim * na)
        residual = 0.0
    else:
        b = np.concatenate([np.zeros(dim * na), grid.spacing * rhs[fac.keep]])
        x = fac.lu.solve(b)
        x = x + fac.lu.solve(b - _kkt_apply(fac, x))
        sol = x[: dim * na]
        residual = float(np.linalg.norm(fac.D @ sol - grid.spacing * rhs) / (grid.spacing * fnorm))
        if not np.isfinite(residual) or residual > RESIDUAL_TOL:
            raise SolverError(f"divergence residual {residual:.3e} exceeds {RESIDUAL_TOL:g}", residual)
    local = np.zeros((dim,) + fac.active.shape)
    for a in range(dim):
        local[a][fac.active] = sol[a * na:(a + 1) * na]
    for a in range(dim):
        out[a][problem._index] = local[a]
    v = VectorField(grid, out)
    if full_output:
        return BogovskiiSolution(v, residual, projection, leak, problem.stats)
    return v


def _kkt_apply(fac: _Factor, x: np.ndarray) -> np.ndarray:
    Dk = fac.D[fac.keep]
    n = fac.D.shape[1]
    v, lam = x[:n], x[n:]
    return np.concatenate([fac.A @ v + Dk.T @ lam, Dk @ v])


def forward_gradient_norm(v: VectorField, p: float, region=None) -> float:
    """|grad v|_p with forward differences, the stencil of the energy."""
    from .core.diff import jacobian

    return lp_norm(jacobian(v, "forward"), p, region if region is not None else "whole")


@dataclass
class NegativeFormResult:
    v: VectorField | None
    ratios: dict
    skipped: bool
    solution: BogovskiiSolution | None = None


def negative_form_apply(problem: AnnulusProblem, g: VectorField, q_values=DEFAULT_Q) -> NegativeFormResult:
    """v = B[div g] for g masked to the active nodes; ratios |v|_q / |g|_q.

    Masking makes g vanish on the annulus boundary, and the central
    divergence of such a g is exactly compatible (its component sums vanish).
    """
    grid = problem.grid
    gm = VectorField(grid, np.where(problem.active, g.values, 0.0))
    if not np.any(gm.values):
        return NegativeFormResult(VectorField.zeros(grid), {q: float("nan") for q in q_values}, True)
    f = problem.divergence(gm)
    sol = solve_bogovskii(problem, f, support="reach", full_output=True)
    ratios = {q: lp_norm(sol.v, q) / lp_norm(gm, q) for q in q_values}
    return NegativeFormResult(sol.v, ratios, False, sol)


def energy_ratios(problem: AnnulusProblem, f: ScalarField, p_values=DEFAULT_Q) -> dict:
    """Solve with ``f`` and return |grad v|_p / |f|_p(annulus) per p plus solve diagnostics."""
    sol = solve_bogovskii(problem, f, full_output=True)
    fa = ScalarField(problem.grid, np.where(problem.active, f.values, 0.0))
    ratios = {}
    for p in p_values:
        nf = lp_norm(fa, p)
        ratios[p] = forward_gradient_norm(sol.v, p) / nf if nf > 0 else float("nan")
    return {"ratios": ratios, "residual": sol.residual, "projection": sol.projection, "solution": sol}


def uniformity_report(eps_list, f_family, grid: Grid, center=None, p_values=DEFAULT_Q, g_family=None) -> list:
    """Per-eps constants for the energy bound and, if ``g_family`` is given, the negative-norm bound.

    ``f_family(grid, ball)`` returns the scalar right-hand side for that ball;
    ``g_family(grid, ball)`` the vector potential.  Returns one dict per eps.
    """
    eps_list = list(eps_list)
    if not eps_list:
        raise ValueError("uniformity report needs at least one eps")
    center = tuple(center) if center is not None else (0.0,) * grid.dim
    rows = []
    for eps in eps_list:
        ball = Ball(center, eps)
        prob = AnnulusProblem(grid, ball)
        er = energy_ratios(prob, f_family(grid, ball), p_values)
        row = {"eps": eps, "energy": er["ratios"], "residual": er["residual"], "projection": er["projection"],
               "stats": prob.stats}
        if g_family is not None:
            nf = negative_form_apply(prob, g_family(grid, ball), p_values)
            row["negative"] = nf.ratios
        rows.append(row)
    return rows
