"""The cutoff restriction operator E: ball mean near the body, identity far away.

    E[phi](x) = M * H(2 - |x-h|/eps) + phi(x) * H(|x-h|/eps - 1),

with M the mean of phi over the ball.  The output is M on |x-h| <= 5/4 eps and
phi on |x-h| >= 7/4 eps.  Vector fields are restricted componentwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .core.diff import gradient, jacobian, lp_norm
from .core.fields import Field, ScalarField, field_like
from .core.grid import Ball, BallGeometry
from .core.quadrature import ball_mean
from .cutoff import h_prime, h_value
from .errors import DegenerateRegionError

DEFAULT_P = (1.5, 2.0, 3.0)
INNER = 1.25
OUTER = 1.75


@dataclass
class RestrictionResult:
    output: Field
    mean: object
    e0: Field
    e1: Field | None
    norms: dict = field(default_factory=dict)

    def constants(self) -> dict:
        """Measured ratios C0[p] = |e0|_p / |phi|_p(B_7/4) and C1[p] likewise."""
        out = {}
        for key, den in (("e0", "phi_ball"), ("e1", "grad_ball")):
            for p, v in self.norms.get(key, {}).items():
                d = self.norms[den][p]
                out[(key, p)] = v / d if d > 0 else float("nan")
        return out


class CutoffWeights:
    """The two cutoff weights and H' on the grid, for one ball."""

    def __init__(self, grid, ball: Ball):
        ball.validate(grid)
        self.geometry = BallGeometry(grid, ball)
        rho = self.geometry.rho
        self.inner = h_value(2.0 - rho)
        self.outer = h_value(rho - 1.0)
        self.slope = h_prime(rho - 1.0)


def _expand(mean, grid):
    m = np.asarray(mean, dtype=float)
    return m.reshape(m.shape + (1,) * grid.dim)


def _mean(phi, ball, mean_method):
    return ball_mean(phi, ball, method=mean_method)


def restrict(phi: Field, ball: Ball, mean=None, weights=None, mean_method="quadrature") -> Field:
    """Evaluate E[phi] only (no diagnostics)."""
    grid = phi.grid
    w = weights or CutoffWeights(grid, ball)
    if mean is None:
        mean = _mean(phi, ball, mean_method)
    return type(phi)(grid, _expand(mean, grid) * w.inner + phi.values * w.outer)


def grad_e(phi: Field, ball: Ball, scheme="spectral", mean_method="quadrature", grad=None, mean=None) -> Field:
    """Analytic gradient of E[phi].

    grad phi * H(rho - 1) + (phi - M) H'(rho - 1) n / eps, with n the unit
    radial vector (zero at the center).  Returns a VectorField for scalar phi
    and a TensorField (T[i, j] = d_j) for vector phi.
    """
    grid = phi.grid
    w = CutoffWeights(grid, ball)
    if mean is None:
        mean = _mean(phi, ball, mean_method)
    if grad is None:
        grad = gradient(phi, scheme) if phi.rank == 0 else jacobian(phi, scheme)
    dev = (phi.values - _expand(mean, grid)) * w.slope / ball.radius
    nrm = w.geometry.normal
    # broadcast: grad has the derivative index right before the grid axes
    vals = grad.values * w.outer + np.expand_dims(dev, -grid.dim - 1) * nrm
    return field_like(grid, vals)


def apply_e(phi: Field, ball: Ball, p_values=DEFAULT_P, scheme="spectral", mean_method="quadrature",
            with_gradient=True) -> RestrictionResult:
    """E[phi] together with the error fields e0 = E[phi] - phi and e1 = grad E[phi] - grad phi."""
    grid = phi.grid
    w = CutoffWeights(grid, ball)
    mean = _mean(phi, ball, mean_method)
    out = restrict(phi, ball, mean=mean, weights=w)
    e0 = out - phi
    norms = {"e0": {}, "phi_ball": {}}
    inner_region = ("ball", OUTER)
    for p in p_values:
        norms["e0"][p] = lp_norm(e0, p)
        norms["phi_ball"][p] = lp_norm(phi, p, inner_region, ball)
    e1 = None
    if with_gradient:
        grad = gradient(phi, scheme) if phi.rank == 0 else jacobian(phi, scheme)
        ge = grad_e(phi, ball, grad=grad, mean=mean)
        e1 = ge - grad
        norms["e1"], norms["grad_ball"] = {}, {}
        for p in p_values:
            norms["e1"][p] = lp_norm(e1, p)
            norms["grad_ball"][p] = lp_norm(grad, p, inner_region, ball)
    return RestrictionResult(out, mean, e0, e1, norms)


def grad_h_e(phi: Field, ball: Ball, scheme="spectral", mean_method="quadrature") -> Field:
    """Derivative of E_h[phi] in the center h, as the commutator E[grad phi] - grad E[phi].

    Component ``a`` (last derivative index) is d/dh_a.
    """
    grad = gradient(phi, scheme) if phi.rank == 0 else jacobian(phi, scheme)
    w = CutoffWeights(phi.grid, ball)
    e_grad = restrict(grad, ball, weights=w, mean_method=mean_method)
    return e_grad - grad_e(phi, ball, scheme=scheme, mean_method=mean_method, grad=grad)


def time_derivative_e(phi: Field, ball: Ball, velocity, dphi_dt: Field | None = None, scheme="spectral",
                      mean_method="quadrature") -> Field:
    """d/dt E_{h(t)}[phi(t)] = E[d_t phi] + (E[grad phi] - grad E[phi]) . Y."""
    Y = np.asarray(velocity, dtype=float)
    if Y.shape != (phi.grid.dim,):
        raise ValueError(f"velocity must have {phi.grid.dim} components")
    comm = grad_h_e(phi, ball, scheme=scheme, mean_method=mean_method)
    transport = field_like(phi.grid, np.tensordot(Y, comm.values, axes=(0, phi.rank)))
    if dphi_dt is None:
        return transport
    if dphi_dt.grid != phi.grid or dphi_dt.rank != phi.rank:
        raise ValueError("time derivative lives on a different grid or has a different rank")
    return restrict(dphi_dt, ball, mean_method=mean_method) + transport


def time_derivative_from_series(phis, centers, times, index: int, ball_radius: float, scheme="spectral",
                                mean_method="quadrature") -> Field:
    """Evaluate the time-derivative formula at ``times[index]`` from sampled data.

    d_t phi and Y are taken by central differences of the series (one-sided at
    the ends).
    """
    if len(phis) != len(centers) or len(phis) != len(times) or len(phis) < 2:
        raise ValueError("series must have matching lengths >= 2")
    grid = phis[0].grid
    if any(p.grid != grid for p in phis):
        raise ValueError("all fields of a series must share one grid")
    lo, hi = max(index - 1, 0), min(index + 1, len(phis) - 1)
    dt = times[hi] - times[lo]
    dphi = (phis[hi] - phis[lo]) / dt
    Y = (np.asarray(centers[hi], float) - np.asarray(centers[lo], float)) / dt
    ball = Ball(tuple(centers[index]), ball_radius)
    return time_derivative_e(phis[index], ball, Y, dphi, scheme=scheme, mean_method=mean_method)


def poincare_constant(phi: ScalarField, ball: Ball, p: float, scheme="spectral", mean_method="quadrature") -> float:
    """(1/eps) |phi - M|_p(5/4 eps <= r <= 7/4 eps) / |grad phi|_p(B_{7/4 eps})."""
    grad = gradient(phi, scheme) if phi.rank == 0 else jacobian(phi, scheme)
    den = lp_norm(grad, p, ("ball", OUTER), ball)
    if den == 0.0:
        raise ValueError("constant field on ball: gradient vanishes on B_7/4eps")
    mean = _mean(phi, ball, mean_method)
    dev = phi - _expand(mean, phi.grid)
    num = lp_norm(dev, p, ("shell", INNER, OUTER), ball) / ball.radius
    return num / den


@dataclass
class SupportCheck:
    ok: bool
    offending: np.ndarray
    max_distance: float


def support_check(phi: Field, ball: Ball, threshold: float = 1e-12) -> SupportCheck:
    """Check supp E[phi] lies in the 3 eps neighbourhood of supp phi."""
    grid = phi.grid
    out = restrict(phi, ball)
    supp_in = phi.magnitude() > threshold
    supp_out = out.magnitude() > threshold
    if not supp_in.any():
        bad = supp_out
        return SupportCheck(not bad.any(), np.argwhere(bad), float("inf") if bad.any() else 0.0)
    dist = ndimage.distance_transform_edt(~supp_in, sampling=grid.spacing)
    bad = supp_out & (dist > 3.0 * ball.radius)
    md = float(dist[supp_out].max()) if supp_out.any() else 0.0
    return SupportCheck(not bad.any(), np.argwhere(bad), md)


def locality_violations(phi: Field, ball: Ball, result: RestrictionResult | None = None) -> dict:
    """Count nodes breaking exact constancy inside 5/4 eps or identity outside 7/4 eps."""
    res = result or apply_e(phi, ball, p_values=(), with_gradient=False)
    geo = BallGeometry(phi.grid, ball)
    inner = geo.rho <= INNER
    outer = geo.rho >= OUTER
    if not inner.any():
        raise DegenerateRegionError("degenerate region: no nodes within 5/4 eps")
    mean = _expand(res.mean, phi.grid)
    vals = res.output.values
    in_bad = np.broadcast_to(vals != mean, vals.shape)[..., inner]
    out_bad = (vals != phi.values)[..., outer]
    return {"inner": int(in_bad.sum()), "outer": int(out_bad.sum()),
            "inner_nodes": int(inner.sum()), "outer_nodes": int(outer.sum())}


__all__ = [
    "CutoffWeights",
    "RestrictionResult",
    "SupportCheck",
    "apply_e",
    "grad_e",
    "grad_h_e",
    "locality_violations",
    "poincare_constant",
    "restrict",
    "support_check",
    "time_derivative_e",
    "time_derivative_from_series",
]
