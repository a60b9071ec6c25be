"""Pressure-estimate harness on synthetic fluid/body states.

The test function is phi = R[grad Lap^{-1} b(rho_f)], and the momentum
balance tested with it splits into five integrals I1..I5.  Time integrals are
collapsed to one slice with weight psi (and d_t psi for I4).  Viscous stress
uses mu = 1, eta = 0; the pressure law is p(rho) = a rho^gamma.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core.diff import jacobian, lp_norm
from .core.fields import ScalarField, TensorField, VectorField
from .core.grid import Ball, BallGeometry, Grid
from .core.quadrature import ball_mean
from .core.snapshot import load_field
from .cutoff import h_value
from .poisson import SpectralSolver, compensate
from .restrict_r import DivPreservingResult, apply_r, central_divergence

# numbers of the existence theory the harness is built around
GAMMA_MIN = 1.5


@dataclass(frozen=True)
class TruncationB:
    """b(r) = 0 on [0,1], r^alpha on [2, inf), cubic Hermite blend on [1,2].

    The blend matches value and slope at both ends, (1, 0, 0) and
    (2, 2^alpha, alpha 2^(alpha-1)); it is monotone for alpha <= 6.
    """

    alpha: float

    def __post_init__(self):
        if not 0 < self.alpha <= 6:
            raise ValueError("alpha must lie in (0, 6]")

    @property
    def _ends(self):
        y1 = 2.0**self.alpha
        m1 = self.alpha * 2.0 ** (self.alpha - 1)
        return y1, m1

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        y1, m1 = self._ends
        t = np.clip(r - 1.0, 0.0, 1.0)
        # Hermite basis with p0 = m0 = 0
        blend = y1 * (3 * t**2 - 2 * t**3) + m1 * (t**3 - t**2)
        out = np.where(r <= 1.0, 0.0, np.where(r >= 2.0, np.abs(r) ** self.alpha, blend))
        return out if out.ndim else float(out)

    def derivative(self, r):
        r = np.asarray(r, dtype=float)
        y1, m1 = self._ends
        t = np.clip(r - 1.0, 0.0, 1.0)
        blend = y1 * (6 * t - 6 * t**2) + m1 * (3 * t**2 - 2 * t)
        safe = np.where(r >= 2.0, r, 2.0)
        out = np.where(r <= 1.0, 0.0, np.where(r >= 2.0, self.alpha * safe ** (self.alpha - 1), blend))
        return out if out.ndim else float(out)


def b_apply(rho: ScalarField, trunc: TruncationB) -> ScalarField:
    if np.any(rho.values < 0):
        raise ValueError("negative density")
    return ScalarField(rho.grid, trunc(rho.values))


@dataclass
class FluidState:
    rho_f: ScalarField
    u: VectorField
    ball: Ball
    Y: np.ndarray
    rho_B: float
    gamma: float
    beta: float
    beta_bar: float
    pressure_coefficient: float = 1.0

    def validate(self) -> None:
        missing = [k for k in ("rho_f", "u", "ball", "Y") if getattr(self, k) is None]
        if missing:
            raise ValueError(f"fluid state is missing {', '.join(missing)}")
        if self.gamma <= GAMMA_MIN:
            raise ValueError("outside existence theory: gamma must exceed 3/2")
        if np.any(self.rho_f.values < 0):
            raise ValueError("negative density")
        inside = BallGeometry(self.rho_f.grid, self.ball).rho <= 1.0
        if np.any(self.rho_f.values[inside] != 0):
            raise ValueError("fluid density must vanish on the body")
        if not self.rho_B > 0:
            raise ValueError("body density must be positive")

    @property
    def grid(self) -> Grid:
        return self.rho_f.grid

    def body_mask(self) -> np.ndarray:
        return BallGeometry(self.grid, self.ball).rho <= 1.0

    def total_density(self) -> ScalarField:
        return ScalarField(self.grid, self.rho_f.values + self.rho_B * self.body_mask())

    def kinetic_energy(self) -> float:
        rho = self.total_density().values
        return float(np.sum(rho * np.sum(self.u.values**2, axis=0)) * self.grid.cell_volume)

    def pressure(self) -> ScalarField:
        return ScalarField(self.grid, self.pressure_coefficient * self.rho_f.values**self.gamma)


def synthetic_state(grid: Grid, eps: float, center=None, gamma: float = 2.0, beta: float = 1.8,
                    beta_bar: float = 1.8, seed: int = 0, velocity: str = "mean") -> FluidState:
    """Manufactured state with the structure the estimates assume.

    Density: a lump of height 4 at a fixed place well away from the body plus
    a background below 0.8, zero on the body.  Velocity: a fixed fluid field
    with both solenoidal and compressible parts, blended into the rigid value
    Y on B_{5/4 eps}.  ``velocity="mean"`` takes Y as the ball mean of the
    fluid field; ``"ceiling"`` puts |Y| at the kinetic-energy ceiling.
    The kinetic energy is normalized to 1.  Only ``seed`` varies the lump
    position and field phases; eps enters only through the body.
    """
    rng = np.random.default_rng(seed)
    dim = grid.dim
    center = tuple(center) if center is not None else (0.0,) * dim
    ball = Ball(center, eps)
    ball.validate(grid)
    x = grid.coords()
    L = grid.L
    lump_at = np.array([0.45 * L] + [0.0] * (dim - 1)) + 0.05 * L * rng.uniform(-1, 1, dim)
    ph = rng.uniform(0, 2 * np.pi, (dim, 2))
    r2 = sum((xi - c) ** 2 for xi, c in zip(x, lump_at))
    lump = 4.0 * np.exp(-r2 / (0.12 * L) ** 2)
    wave = np.ones(grid.shape)
    for a, xi in enumerate(x):
        wave = wave * np.cos(np.pi * xi / L + ph[a, 0])
    background = 0.4 + 0.3 * wave
    geo = BallGeometry(grid, ball)
    rho_f = np.maximum(lump, background) * (geo.rho > 1.0)
    # smooth periodic fluid velocity: swirl plus compression
    k = np.pi / L
    uf = []
    for a in range(dim):
        b = (a + 1) % dim
        swirl = np.sin(k * x[b] + ph[a, 0]) * np.cos(k * x[a] + ph[a, 1])
        comp = 0.5 * np.sin(k * x[a] + ph[b, 1])
        uf.append(np.broadcast_to(swirl + comp, grid.shape))
    uf = VectorField(grid, np.stack(uf))
    if velocity == "mean":
        Y = np.asarray(ball_mean(uf, ball, method="spectral"))
    elif velocity == "ceiling":
        rho_B = eps**-beta
        ceiling = math.sqrt(1.0 / (rho_B * eps**dim))
        Y = np.zeros(dim)
        Y[0] = ceiling
    else:
        raise ValueError(f"unknown velocity mode {velocity!r}")
    chi = h_value(2.0 - geo.rho)
    u = uf.values * (1.0 - chi) + Y.reshape((-1,) + (1,) * dim) * chi
    state = FluidState(ScalarField(grid, rho_f), VectorField(grid, u), ball, Y, eps**-beta, gamma, beta, beta_bar)
    scale = 1.0 / math.sqrt(state.kinetic_energy())
    state.u = state.u * scale
    state.Y = Y * scale
    return state


def load_state(rho_path, u_path, ball: Ball, Y, rho_B: float, gamma: float, beta: float,
               beta_bar: float) -> FluidState:
    """FluidState from a density snapshot and a velocity snapshot on the same grid."""
    rho_f, u = load_field(rho_path), load_field(u_path)
    if not isinstance(rho_f, ScalarField) or not isinstance(u, VectorField):
        raise ValueError("expected a scalar density snapshot and a vector velocity snapshot")
    if rho_f.grid != u.grid:
        raise ValueError("density and velocity snapshots live on different grids")
    state = FluidState(rho_f, u, ball, np.asarray(Y, dtype=float), rho_B, gamma, beta, beta_bar)
    state.validate()
    return state


def build_test_function(state: FluidState, trunc: TruncationB, problem=None) -> DivPreservingResult:
    """phi = R[grad Lap^{-1} b(rho_f)] with the far-field sink keeping div = 0 near the body."""
    b = b_apply(state.rho_f, trunc)
    solver = SpectralSolver(state.grid, "central")
    pot = solver.grad_inv_laplacian(b, sink=state.ball)
    return apply_r(pot, state.ball, problem=problem, p_values=())


@dataclass
class IntegralReport:
    I: dict
    lhs: float
    parts: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    note: str = "single time slice; I5 assembled from the three-term time-derivative formula"

    def total(self) -> float:
        return float(sum(self.I.values()))

    def as_dict(self) -> dict:
        return {"I": dict(self.I), "lhs": self.lhs, "parts": dict(self.parts), "bounds": dict(self.bounds),
                "note": self.note}


def _stress(u: VectorField) -> TensorField:
    J = jacobian(u, "central").values
    d = u.grid.dim
    div = sum(J[a, a] for a in range(d))
    S = J + np.swapaxes(J, 0, 1)
    for a in range(d):
        S[a, a] = S[a, a] - (2.0 / d) * div
    return TensorField(u.grid, S)


def compute_integrals(state: FluidState, trunc: TruncationB, psi: float = 1.0, dpsi_dt: float = -1.0,
                      problem=None) -> IntegralReport:
    state.validate()
    grid = state.grid
    dv = grid.cell_volume
    ball = state.ball
    solver = SpectralSolver(grid, "central")
    b = b_apply(state.rho_f, trunc)
    Y = np.asarray(state.Y, dtype=float)
    rho = state.total_density().values
    u = state.u.values
    mom = rho * u

    if not np.any(b.values):
        zero = {f"I{i}": 0.0 for i in range(1, 6)}
        return IntegralReport(zero, 0.0)

    pot = solver.grad_inv_laplacian(b, sink=ball)
    res = apply_r(pot, ball, problem=problem, p_values=())
    phi = res.output
    grad_phi = jacobian(phi, "central").values

    I1 = psi * float(np.sum(_stress(state.u).values * grad_phi) * dv)
    uu = u[:, None] * u[None, :]
    I2 = -psi * float(np.sum(state.rho_f.values * uu * grad_phi) * dv)
    m0 = float(np.sum(mom * phi.values) * dv)
    I3 = -m0
    I4 = dpsi_dt * m0

    # time derivative of the test function
    bu = VectorField(grid, b.values * u)
    t_flux = solver.riesz_right_inverse(-bu)
    bprime = trunc.derivative(state.rho_f.values)
    defect = ScalarField(grid, (b.values - bprime * state.rho_f.values) * central_divergence(state.u).values)
    t_defect = solver.grad_inv_laplacian(defect, sink=ball)
    ta = apply_r(t_flux + t_defect, ball, problem=problem, p_values=()).output
    hess = solver.hessian_inv_laplacian(compensate(b, ball))
    tb = apply_r(hess.contract(Y), ball, problem=problem, p_values=()).output
    tc = TensorField(grid, grad_phi).contract(Y)
    body = state.body_mask()
    ydiff = (tb - tc).values
    I5a = psi * float(np.sum(mom * ta.values) * dv)
    I5_body = psi * float(np.sum(np.where(body, mom * ydiff, 0.0)) * dv)
    I5_fluid = psi * float(np.sum(np.where(body, 0.0, mom * ydiff)) * dv)
    I5 = I5a + I5_body + I5_fluid

    lhs = psi * float(np.sum(state.pressure().values * b.values) * dv)
    parts = {"I5_transport": I5a, "I5_body": I5_body, "I5_fluid": I5_fluid,
             "div_error": res.norms["div_error"], "Y": [float(v) for v in Y]}
    bounds = {
        "grad_phi_L2": lp_norm(TensorField(grid, grad_phi), 2.0),
        "phi_L2": lp_norm(phi, 2.0),
        "b_L1": lp_norm(b, 1.0),
        "b_Lgamma_over_alpha": lp_norm(b, state.gamma / trunc.alpha),
        "hessian_ratio_L2": lp_norm(hess, 2.0) / lp_norm(b, 2.0),
    }
    return IntegralReport({"I1": I1, "I2": I2, "I3": I3, "I4": I4, "I5": I5}, lhs, parts, bounds)


# exponent arithmetic ----------------------------------------------------------

def admissible_window(gamma: float) -> tuple:
    """(lower, upper) of the body-density window: lower < beta <= beta_bar < upper."""
    return 2.0 * (3.0 - gamma) / gamma, 2.0


def scaling_exponent_check(gamma: float, alpha: float, beta: float, beta_bar: float) -> dict:
    if gamma <= GAMMA_MIN:
        raise ValueError("outside existence theory: gamma must exceed 3/2")
    s = 1.0 - 1.0 / gamma - alpha / gamma - 1.0 / 6.0
    fluid = 0.5 * beta - (3.0 - gamma) / gamma - 3.0 * alpha / gamma
    body = 3.0 * (5.0 / 6.0 - alpha / gamma) - 1.5 - 0.5 * beta_bar
    lo, hi = admissible_window(gamma)
    window = bool(lo < beta <= beta_bar < hi)
    return {
        "gamma": gamma,
        "alpha": alpha,
        "beta": beta,
        "beta_bar": beta_bar,
        "s": s,
        "fluid_exponent": fluid,
        "body_exponent": body,
        "velocity_exponent": 0.5 * (beta - 3.0),
        "window": [lo, hi],
        "window_ok": window,
        "fluid_positive": fluid > 0,
        "body_positive": body > 0,
        "elliptic_range_ok": 3.0 * alpha < gamma,
    }


def rigid_velocity_bound(rho_B: float, eps: float, Y, dim: int = 3, energy: float = 1.0) -> dict:
    """Check rho_B eps^d |Y|^2 <= energy and return the implied speed ceiling."""
    speed = float(np.linalg.norm(np.asarray(Y, dtype=float)))
    value = rho_B * eps**dim * speed**2
    ceiling = math.sqrt(energy / (rho_B * eps**dim))
    return {"value": value, "ceiling": ceiling, "speed": speed,
            "ok": value <= energy * (1.0 + 1e-12)}


def state_velocity_bound(state: FluidState) -> dict:
    return rigid_velocity_bound(state.rho_B, state.ball.radius, state.Y, dim=state.grid.dim)


def equi_integrability_report(rows) -> dict:
    """Compare the pressure side with the sum of |I_i| over a sweep.

    ``rows`` holds dicts with "eps", "lhs" and "I".  The synthetic states do
    not satisfy the momentum balance, so the identity between the two sides
    is not asserted; both are reported with their fitted slopes.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("equi-integrability report needs a nonempty sweep")
    from .sweep.report import fit_slope

    eps = [r["eps"] for r in rows]
    lhs = [r["lhs"] for r in rows]
    rhs = [sum(abs(v) for v in r["I"].values()) for r in rows]
    return {
        "eps": eps,
        "lhs": lhs,
        "sum_abs_I": rhs,
        "lhs_slope": fit_slope(eps, lhs).as_dict(),
        "sum_slope": fit_slope(eps, rhs).as_dict(),
        "bounded_by_sum": all(a <= b * (1 + 1e-9) for a, b in zip(lhs, rhs)),
        "balance_asserted": False,
    }


__all__ = [
    "FluidState",
    "IntegralReport",
    "TruncationB",
    "admissible_window",
    "b_apply",
    "build_test_function",
    "compute_integrals",
    "equi_integrability_report",
    "load_state",
    "rigid_velocity_bound",
    "scaling_exponent_check",
    "state_velocity_bound",
    "synthetic_state",
]
