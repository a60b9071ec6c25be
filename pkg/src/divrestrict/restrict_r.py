"""Divergence-preserving restriction R = E + Bogovskii correction.

    R[phi] = E[phi] + B_annulus[ div phi - div E[phi] ]

with div the two-point central difference used by the annulus solver, so
div R[phi] = div phi holds at the discrete level.  The input must be
divergence free on the ball; then the right-hand side is supported in the
annulus and has vanishing component sums.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bogovskii import DEFAULT_Q, AnnulusProblem, solve_bogovskii
from .core.diff import jacobian, lp_norm
from .core.fields import ScalarField, VectorField
from .core.grid import Ball, BallGeometry
from .errors import CompatibilityError
from .poisson import SpectralSolver
from .core.quadrature import ball_mean
from .restrict_e import CutoffWeights, restrict

COMPAT_TOL = 1e-8


def central_divergence(v: VectorField) -> ScalarField:
    g = v.grid
    out = sum((np.roll(v.values[a], -1, a) - np.roll(v.values[a], 1, a)) for a in range(g.dim))
    return ScalarField(g, out / (2.0 * g.spacing))


@dataclass
class CompatibilityRecord:
    div_on_ball: float  # max |div phi| over |x-h| <= eps
    component_means: list  # per constraint component, mean of the correction rhs
    leakage: float  # max |rhs| outside the constraint nodes
    scale: float
    ok: bool

    def as_dict(self) -> dict:
        return {
            "div_on_ball": self.div_on_ball,
            "component_means": list(self.component_means),
            "leakage": self.leakage,
            "scale": self.scale,
            "ok": self.ok,
        }


@dataclass
class DivPreservingResult:
    output: VectorField
    correction: VectorField
    restricted: VectorField
    mean: np.ndarray
    compatibility: CompatibilityRecord
    residual: float
    norms: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)


def _rhs(phi: VectorField, ball: Ball, mean_method: str):
    e_phi = restrict(phi, ball, mean_method=mean_method)
    return e_phi, central_divergence(phi - e_phi)


def check_compatibility(phi: VectorField, ball: Ball, problem: AnnulusProblem | None = None,
                        mean_method: str = "quadrature", tol: float = COMPAT_TOL) -> CompatibilityRecord:
    """Residuals that must vanish for R[phi] to be defined.

    ``div_on_ball`` is the sup of the discrete divergence over the ball;
    ``component_means`` are the means of div(phi - E phi) over each
    constraint component, the discrete zero-mean condition on the annulus.
    Both are compared with tol * scale, scale = max |grad phi|.
    """
    grid = phi.grid
    problem = problem or AnnulusProblem(grid, ball)
    geo = BallGeometry(grid, ball)
    div = central_divergence(phi).values
    inside = geo.rho <= 1.0
    div_ball = float(np.abs(div[inside]).max())
    _, rhs = _rhs(phi, ball, mean_method)
    means = problem.component_sums(rhs.values) / problem.component_sizes()
    leak = float(np.abs(np.where(problem.reach, 0.0, rhs.values)).max())
    scale = float(np.abs(jacobian(phi, "central").values).max())
    thresh = tol * scale
    ok = div_ball <= thresh and leak <= thresh and float(np.abs(means).max()) <= thresh
    return CompatibilityRecord(div_ball, [float(m) for m in means], leak, scale, bool(ok))


def w1p_norm(v: VectorField, p: float) -> float:
    a = lp_norm(v, p)
    b = lp_norm(jacobian(v, "forward"), p)
    if np.isinf(p):
        return max(a, b)
    return (a**p + b**p) ** (1.0 / p)


def apply_r(phi: VectorField, ball: Ball, problem: AnnulusProblem | None = None, p_values=DEFAULT_Q,
            mean_method: str = "quadrature", tol: float = COMPAT_TOL, enforce: bool = True) -> DivPreservingResult:
    """Evaluate R[phi]; raise CompatibilityError if phi is not divergence free on the ball.

    With ``enforce=False`` an incompatible input is still processed: the part
    of the right-hand side the annulus cannot absorb is dropped and shows up
    in ``norms["div_error"]``.
    """
    grid = phi.grid
    problem = problem or AnnulusProblem(grid, ball)
    rec = check_compatibility(phi, ball, problem, mean_method=mean_method, tol=tol)
    if enforce and not rec.ok:
        raise CompatibilityError(
            f"input is not divergence free on the ball (div {rec.div_on_ball:.3e}, "
            f"leak {rec.leakage:.3e}, scale {rec.scale:.3e})", rec.as_dict())
    w = CutoffWeights(grid, ball)
    mean = np.asarray(ball_mean(phi, ball, method=mean_method))
    e_phi = restrict(phi, ball, mean=mean, weights=w)
    rhs = central_divergence(phi - e_phi)
    sol = solve_bogovskii(problem, rhs, support="reach", full_output=True)
    out = e_phi + sol.v
    div_in = central_divergence(phi)
    div_err = lp_norm(central_divergence(out) - div_in, 2.0)
    norms = {"div_error": div_err, "div_norm": lp_norm(div_in, 2.0)}
    for p in p_values:
        den = w1p_norm(phi, p)
        norms.setdefault("w1p_ratio", {})[p] = w1p_norm(out, p) / den if den > 0 else float("nan")
    return DivPreservingResult(out, sol.v, e_phi, mean, rec, sol.residual, norms,
                               {"bogovskii_projection": sol.projection, "stats": sol.stats})


# shifted form ---------------------------------------------------------------

def _frac_shift(values: np.ndarray, grid, frac) -> np.ndarray:
    """Band-limited translation: returns samples of x -> v(x + frac * spacing)."""
    if not any(frac):
        return values
    axes = tuple(range(-grid.dim, 0))
    hat = np.fft.rfftn(values, axes=axes)
    phase = sum(k * f * grid.spacing for k, f in zip(grid.wavenumbers(), frac))
    return np.fft.irfftn(hat * np.exp(1j * phase), s=grid.shape, axes=axes)


def shift_to_origin(phi, ball: Ball):
    """S_h: the field x -> phi(x + h), with whole-cell rolls applied exactly."""
    grid = phi.grid
    geo = BallGeometry(grid, ball)
    k = [c - grid.n // 2 for c in geo.cell]
    axes = tuple(range(-grid.dim, 0))
    rolled = np.roll(phi.values, [-kk for kk in k], axis=axes)
    return type(phi)(grid, _frac_shift(rolled, grid, geo.frac)), k, geo.frac


def shift_from_origin(psi, k, frac):
    """S_{-h}, the inverse of shift_to_origin."""
    grid = psi.grid
    axes = tuple(range(-grid.dim, 0))
    back = _frac_shift(psi.values, grid, [-f for f in frac])
    return type(psi)(grid, np.roll(back, list(k), axis=axes))


def apply_r_shifted(phi: VectorField, ball: Ball, p_values=DEFAULT_Q, mean_method: str = "quadrature",
                    tol: float = COMPAT_TOL) -> DivPreservingResult:
    """R_h[phi] = S_{-h} R_0 [S_h phi], with R_0 centered on the origin node.

    Compatibility is checked on ``phi`` itself.  A sub-cell shift
    interpolates, which can leave a small divergence on the shifted ball;
    that residue is reported in ``norms["div_error"]`` rather than rejected.
    """
    grid = phi.grid
    rec = check_compatibility(phi, ball, mean_method=mean_method, tol=tol)
    if not rec.ok:
        raise CompatibilityError("input is not divergence free on the ball", rec.as_dict())
    shifted, k, frac = shift_to_origin(phi, ball)
    origin = Ball((0.0,) * grid.dim, ball.radius)
    res = apply_r(shifted, origin, p_values=p_values, mean_method=mean_method, tol=tol, enforce=not any(frac))
    out = shift_from_origin(res.output, k, frac)
    corr = shift_from_origin(res.correction, k, frac)
    restr = shift_from_origin(res.restricted, k, frac)
    return DivPreservingResult(out, corr, restr, res.mean, res.compatibility, res.residual, res.norms,
                               dict(res.diagnostics, shift_cells=list(k), shift_fraction=list(frac)))


# negative-norm diagnostics --------------------------------------------------

def mask_off_ball(g, ball: Ball):
    """Zero ``g`` on |x-h| <= eps + spacing, so its central divergence vanishes on the ball."""
    grid = g.grid
    rho = BallGeometry(grid, ball).rho
    keep = rho > 1.0 + grid.spacing / ball.radius
    return type(g)(grid, np.where(keep, g.values, 0.0))


@dataclass
class NegativeNormResult:
    ratios: dict
    skipped: bool
    result: DivPreservingResult | None = None
    terms: dict = field(default_factory=dict)


def _ratios(out: VectorField, den_field, q_values) -> dict:
    return {q: lp_norm(out, q) / lp_norm(den_field, q) for q in q_values}


def ep2_negative_norm(g: VectorField, ball: Ball, q_values=DEFAULT_Q, problem: AnnulusProblem | None = None,
                      decomposition: bool = False, mean_method: str = "quadrature") -> NegativeNormResult:
    """|R[grad Lap^{-1} div g]|_q / |g|_q for g vanishing on the ball.

    With ``decomposition`` the correction's right-hand side is also split
    into the cutoff-slope part and the divergence part, each solved
    separately, and their norms are reported (diagnostic only).
    """
    grid = g.grid
    gm = mask_off_ball(g, ball)
    if not np.any(gm.values):
        return NegativeNormResult({q: float("nan") for q in q_values}, True)
    phi = SpectralSolver(grid, "central").riesz_right_inverse(gm)
    if lp_norm(phi, 2.0) <= 1e-14 * lp_norm(gm, 2.0):
        return NegativeNormResult({q: 0.0 for q in q_values}, False)
    problem = problem or AnnulusProblem(grid, ball)
    res = apply_r(phi, ball, problem, p_values=(), mean_method=mean_method)
    out = NegativeNormResult(_ratios(res.output, gm, q_values), False, res)
    if decomposition:
        out.terms = _decompose(phi, gm, ball, problem, res, q_values)
    return out


def _decompose(phi, g, ball, problem, res, q_values) -> dict:
    grid = phi.grid
    w = CutoffWeights(grid, ball)
    nrm = w.geometry.normal
    slope = w.slope / ball.radius
    mean = res.mean.reshape((-1,) + (1,) * grid.dim)
    a = slope * np.sum(nrm * (mean - phi.values), axis=0)
    b = slope * np.sum(nrm * g.values, axis=0)
    c = central_divergence(VectorField(grid, g.values * (1.0 - w.outer))).values
    rhs = central_divergence(phi - res.restricted).values
    defect = np.linalg.norm(a + b + c - rhs) / max(np.linalg.norm(rhs), 1e-300)
    va = solve_bogovskii(problem, ScalarField(grid, a + b), support="reach", full_output=True)
    vc = solve_bogovskii(problem, ScalarField(grid, c), support="reach", full_output=True)
    return {
        "slope_terms": {q: lp_norm(va.v, q) / lp_norm(g, q) for q in q_values},
        "divergence_term": {q: lp_norm(vc.v, q) / lp_norm(g, q) for q in q_values},
        "slope_projection": va.projection,
        "decomposition_defect": float(defect),
    }


def er1_variant(r: ScalarField, V, ball: Ball, q_values=DEFAULT_Q, problem: AnnulusProblem | None = None,
                mean_method: str = "quadrature") -> NegativeNormResult:
    """|R[(grad grad Lap^{-1} r) V]|_q / |r V|_q for r vanishing on the ball."""
    grid = r.grid
    V = np.asarray(V, dtype=float)
    rm = mask_off_ball(r, ball)
    if not np.any(rm.values) or not np.any(V):
        return NegativeNormResult({q: float("nan") for q in q_values}, True)
    phi = SpectralSolver(grid, "central").hessian_inv_laplacian(rm).contract(V)
    gv = VectorField(grid, V.reshape((-1,) + (1,) * grid.dim) * rm.values)
    problem = problem or AnnulusProblem(grid, ball)
    res = apply_r(phi, ball, problem, p_values=(), mean_method=mean_method)
    return NegativeNormResult(_ratios(res.output, gv, q_values), False, res)


__all__ = [
    "CompatibilityRecord",
    "DivPreservingResult",
    "NegativeNormResult",
    "apply_r",
    "apply_r_shifted",
    "central_divergence",
    "check_compatibility",
    "ep2_negative_norm",
    "er1_variant",
    "mask_off_ball",
    "shift_from_origin",
    "shift_to_origin",
    "w1p_norm",
]
