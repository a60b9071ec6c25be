"""Verification suites run over the eps sweep.

Each suite appends rows to a SweepReport: one row per measurement and eps,
then slope/drift rows over the sweep.  A failure inside one eps becomes a
failed row and the sweep goes on.
"""
from __future__ import annotations

import logging
import math

import numpy as np

from .. import bogovskii
from ..bogovskii import AnnulusProblem, energy_ratios, negative_form_apply
from ..core.fields import ScalarField, VectorField
from ..core.grid import Ball, BallGeometry
from ..pressure import (
    TruncationB,
    compute_integrals,
    equi_integrability_report,
    rigid_velocity_bound,
    scaling_exponent_check,
    state_velocity_bound,
    synthetic_state,
)
from ..restrict_e import (
    apply_e,
    grad_h_e,
    locality_violations,
    poincare_constant,
    restrict,
    support_check,
    time_derivative_e,
)
from ..restrict_r import apply_r, ep2_negative_norm, er1_variant
from .fixtures import annulus_bump, build_fixtures, scaled_coords
from .report import SweepReport, fit_slope

log = logging.getLogger(__name__)

P_VALUES = (1.5, 2.0, 3.0)
FD_FRACTION = 1.0 / 512.0  # parameter step as a fraction of eps
RR1_GAMMAS = (1.6, 2.0, 3.0, 3.01, 4.0, 6.0)


def fd_step(grid, ball) -> float:
    """Parameter step for the finite-difference oracles: min(spacing/4, eps/512)."""
    return min(grid.spacing / 4.0, ball.radius * FD_FRACTION)


def _centered(F, delta):
    return (F(1) - F(-1)) / (2.0 * delta)


def _rel_max(a, b) -> float:
    scale = float(np.abs(b).max())
    return float(np.abs(a - b).max()) / scale if scale > 0 else float(np.abs(a - b).max())


def commutator_fd_error(phi, ball, delta=None, mean_method="spectral") -> float:
    """Max relative gap between grad_h_e and a centered difference of E_h[phi] in h."""
    grid = phi.grid
    delta = fd_step(grid, ball) if delta is None else delta
    comm = grad_h_e(phi, ball, mean_method=mean_method)
    worst = 0.0
    for a in range(grid.dim):
        e = np.eye(grid.dim)[a]
        fd = _centered(lambda s: restrict(phi, ball.shifted(s * delta * e), mean_method=mean_method).values, delta)
        worst = max(worst, _rel_max(fd, np.take(comm.values, a, axis=phi.rank)))
    return worst


def time_derivative_fd_error(phi, ball, Y, delta=None, mean_method="spectral") -> float:
    """Same check for d/dt E_{h + tY}[exp(t) phi] at t = 0."""
    grid = phi.grid
    Y = np.asarray(Y, dtype=float)
    delta = fd_step(grid, ball) if delta is None else delta
    tau = delta / float(np.linalg.norm(Y))
    formula = time_derivative_e(phi, ball, Y, dphi_dt=phi, mean_method=mean_method).values
    fd = _centered(
        lambda s: restrict(phi * math.exp(s * tau), ball.shifted(s * tau * Y), mean_method=mean_method).values,
        tau,
    )
    return _rel_max(fd, formula)


def _verdict(ok: bool) -> str:
    return "pass" if ok else "fail"


class _Series:
    """Per-quantity (eps, value) collections for the slope rows."""

    def __init__(self):
        self.data = {}

    def add(self, key, eps, value):
        self.data.setdefault(key, ([], []))
        self.data[key][0].append(eps)
        self.data[key][1].append(value)

    def items(self):
        return self.data.items()


def _fail_row(report, suite, eps, exc):
    log.warning("%s eps=%g failed: %s", suite, eps, exc)
    report.add(suite, "error", eps, None, "fail", f"{type(exc).__name__}: {exc}")


def _slope_rows(report, suite, series, tol, criterion, mode="abs"):
    for key, (eps, vals) in series.items():
        fit = fit_slope(eps, vals)
        if not fit.available:
            verdict = "skip"
        elif mode == "abs":
            verdict = _verdict(abs(fit.slope) <= tol)
        else:
            verdict = _verdict(fit.slope >= tol)
        report.add_slope(suite, key, fit, verdict, criterion)


def _drift_rows(report, suite, series, tol, criterion):
    for key, (eps, vals) in series.items():
        v = np.asarray(vals, dtype=float)
        if len(v) < 2 or not np.all(np.isfinite(v)) or np.any(v <= 0):
            report.add(suite, f"drift:{key}", None, None, "skip", criterion + "; needs two positive values")
            continue
        drift = float(v.max() / v.min() - 1.0)
        report.add(suite, f"drift:{key}", None, drift, _verdict(drift <= tol), criterion)


def _skip_3d(config, report, suite) -> bool:
    if config.dim == 3 and not config.bogovskii_3d:
        msg = f"{suite}: annulus solves skipped in three dimensions (set bogovskii_3d to run them)"
        report.warnings.append(msg)
        report.add(suite, "skipped", None, None, "skip", msg)
        return True
    return False


# --- suites ---------------------------------------------------------------

def verify_e(config, report: SweepReport) -> None:
    suite = "verify-e"
    grid = config.grid()
    consts, poinc = _Series(), _Series()
    for eps in config.eps:
        try:
            fx = build_fixtures(grid, Ball(config.center_for(grid), eps), config.seed)
            ball = fx.ball
            named = [("scalar0", fx.scalars[0]), ("scalar1", fx.scalars[1]), ("vector0", fx.vectors[0]),
                     ("divfree0", fx.divfree[0]), ("divfree1", fx.divfree[1]), ("source0", fx.bogovskii[0])]
            for name, phi in named:
                res = apply_e(phi, ball, p_values=P_VALUES, with_gradient=name in ("scalar0", "vector0"))
                viol = locality_violations(phi, ball, res)
                report.add(suite, f"locality_inner:{name}", eps, viol["inner"], _verdict(viol["inner"] == 0),
                           f"nodes checked {viol['inner_nodes']}")
                report.add(suite, f"locality_outer:{name}", eps, viol["outer"], _verdict(viol["outer"] == 0),
                           f"nodes checked {viol['outer_nodes']}")
                for (kind, p), c in sorted(res.constants().items()):
                    report.add(suite, f"{kind}_p{p:g}:{name}", eps, c)
                    consts.add(f"{kind}_p{p:g}:{name}", eps, c)
            sc = support_check(fx.bogovskii[0], ball)
            report.add(suite, "support:source0", eps, sc.max_distance / eps, _verdict(sc.ok),
                       "max distance of output support from input support, in eps")
            for k, phi in enumerate(fx.scalars):
                for p in P_VALUES:
                    c = poincare_constant(phi, ball, p)
                    report.add(suite, f"poincare_p{p:g}:scalar{k}", eps, c)
                    poinc.add(f"poincare_p{p:g}:scalar{k}", eps, c)
            tol = config.tol("fd_relative")
            err = commutator_fd_error(fx.scalars[0], ball)
            report.add(suite, "commutator_fd:scalar0", eps, err, _verdict(err <= tol), f"tol {tol:g}")
            err = commutator_fd_error(fx.vectors[0], ball)
            report.add(suite, "commutator_fd:vector0", eps, err, _verdict(err <= tol), f"tol {tol:g}")
            Y = np.linspace(0.7, -0.4, grid.dim)
            err = time_derivative_fd_error(fx.scalars[0], ball, Y)
            report.add(suite, "time_derivative_fd:scalar0", eps, err, _verdict(err <= tol), f"tol {tol:g}")
        except Exception as exc:  # noqa: BLE001
            _fail_row(report, suite, eps, exc)
    _slope_rows(report, suite, consts, config.tol("e_slope"), "error constants eps-uniform")
    _drift_rows(report, suite, poinc, config.tol("poincare_drift"), "Poincare ratio eps-invariant")
    _slope_rows(report, suite, poinc, config.tol("e_slope"), "Poincare ratio slope")


def _annulus_problem(grid, ball):
    return AnnulusProblem(grid, ball)


def verify_bogovskii(config, report: SweepReport) -> None:
    suite = "verify-bogovskii"
    if _skip_3d(config, report, suite):
        return
    grid = config.grid()
    energy, negative, drift = _Series(), _Series(), _Series()
    for eps in config.eps:
        try:
            fx = build_fixtures(grid, Ball(config.center_for(grid), eps), config.seed)
            prob = _annulus_problem(grid, fx.ball)
            st = prob.stats
            report.add(suite, "active_nodes", eps, st["active_nodes"], "info",
                       f"factor nnz {st['factor_nnz']}")
            for k, f in enumerate(fx.bogovskii):
                er = energy_ratios(prob, f, P_VALUES)
                tol = config.tol("bogovskii_residual")
                report.add(suite, f"residual:source{k}", eps, er["residual"], _verdict(er["residual"] <= tol),
                           f"tol {tol:g}")
                v = er["solution"].v.values
                trace = float(np.abs(v[:, ~prob.active]).max()) if (~prob.active).any() else 0.0
                report.add(suite, f"zero_trace:source{k}", eps, trace, _verdict(trace == 0.0), "exact")
                report.add(suite, f"projection:source{k}", eps, er["projection"])
                for p, c in er["ratios"].items():
                    report.add(suite, f"energy_p{p:g}:source{k}", eps, c, "info",
                               "exact minimizer" if p == 2.0 else "measured")
                    (drift if p == 2.0 else energy).add(f"energy_p{p:g}:source{k}", eps, c)
            y = scaled_coords(grid, fx.ball)
            g = VectorField(grid, fx.vectors[0].values * annulus_bump(y))
            nf = negative_form_apply(prob, g, P_VALUES)
            for q, c in nf.ratios.items():
                report.add(suite, f"negative_q{q:g}:vector0", eps, c)
                negative.add(f"negative_q{q:g}:vector0", eps, c)
        except Exception as exc:  # noqa: BLE001
            _fail_row(report, suite, eps, exc)
        finally:
            bogovskii.clear_cache()
    _drift_rows(report, suite, drift, config.tol("bogovskii_drift"), "p=2 constant eps-uniform")
    _slope_rows(report, suite, energy, config.tol("solver_slope"), "p in {3/2, 3} constants")
    _slope_rows(report, suite, drift, config.tol("solver_slope"), "p=2 constant slope")
    _slope_rows(report, suite, negative, config.tol("solver_slope"), "negative-norm bound")


def verify_r(config, report: SweepReport) -> None:
    suite = "verify-r"
    if _skip_3d(config, report, suite):
        return
    grid = config.grid()
    w1p = _Series()
    for eps in config.eps:
        try:
            fx = build_fixtures(grid, Ball(config.center_for(grid), eps), config.seed)
            ball = fx.ball
            prob = _annulus_problem(grid, ball)
            rho = BallGeometry(grid, ball).rho
            for k, phi in enumerate(fx.divfree):
                res = apply_r(phi, ball, prob, p_values=P_VALUES)
                name = f"divfree{k}"
                report.add(suite, f"compatibility:{name}", eps, res.compatibility.div_on_ball,
                           _verdict(res.compatibility.ok))
                bound = config.tol("div_relative") * res.norms["div_norm"] + config.tol("div_floor")
                report.add(suite, f"div_error:{name}", eps, res.norms["div_error"],
                           _verdict(res.norms["div_error"] <= bound), f"bound {bound:.3g}")
                out = res.output.values
                mean = np.asarray(res.mean).reshape((-1,) + (1,) * grid.dim)
                inside = int(np.sum(np.broadcast_to(out != mean, out.shape)[:, rho < 1.0]))
                outside = int(np.sum((out != phi.values)[:, rho > 2.0]))
                report.add(suite, f"inside_exact:{name}", eps, inside, _verdict(inside == 0))
                report.add(suite, f"outside_exact:{name}", eps, outside, _verdict(outside == 0))
                for p, c in res.norms["w1p_ratio"].items():
                    report.add(suite, f"w1p_p{p:g}:{name}", eps, c)
                    w1p.add(f"w1p_p{p:g}:{name}", eps, c)
        except Exception as exc:  # noqa: BLE001
            _fail_row(report, suite, eps, exc)
        finally:
            bogovskii.clear_cache()
    _slope_rows(report, suite, w1p, config.tol("solver_slope"), "W1p amplification eps-uniform")


def verify_ep2(config, report: SweepReport) -> None:
    suite = "verify-ep2"
    if _skip_3d(config, report, suite):
        return
    grid = config.grid()
    series = _Series()
    V = np.linspace(1.0, 0.5, grid.dim)
    for eps in config.eps:
        try:
            fx = build_fixtures(grid, Ball(config.center_for(grid), eps), config.seed)
            prob = _annulus_problem(grid, fx.ball)
            g, r = fx.potentials
            ep = ep2_negative_norm(g, fx.ball, P_VALUES, prob)
            er = er1_variant(r, V, fx.ball, P_VALUES, prob)
            for tag, res in (("ep2", ep), ("er1", er)):
                for q, c in res.ratios.items():
                    report.add(suite, f"{tag}_q{q:g}", eps, c)
                    series.add(f"{tag}_q{q:g}", eps, c)
                comp = res.result.compatibility
                report.add(suite, f"{tag}_compatibility", eps, comp.div_on_ball, _verdict(comp.ok))
        except Exception as exc:  # noqa: BLE001
            _fail_row(report, suite, eps, exc)
        finally:
            bogovskii.clear_cache()
    _slope_rows(report, suite, series, config.tol("solver_slope"), "negative-space continuity eps-uniform")


def pressure_sweep(config, report: SweepReport) -> None:
    suite = "pressure-sweep"
    if _skip_3d(config, report, suite):
        return
    grid = config.grid()
    trunc = TruncationB(config.alpha)
    series, rows = _Series(), []
    for eps in config.eps:
        try:
            state = synthetic_state(grid, eps, config.center_for(grid), config.gamma, config.beta,
                                    config.beta_bar, seed=config.seed)
            rep = compute_integrals(state, trunc)
            for name, val in sorted(rep.I.items()):
                report.add(suite, f"|{name}|", eps, abs(val), "info", f"signed {val:.17g}")
                series.add(f"|{name}|", eps, abs(val))
            report.add(suite, "pressure_side", eps, rep.lhs, "info", "single time slice")
            report.add(suite, "div_error", eps, rep.parts["div_error"])
            vb = state_velocity_bound(state)
            report.add(suite, "kinetic_ceiling", eps, vb["value"], _verdict(vb["ok"]))
            rows.append({"eps": eps, "lhs": rep.lhs, "I": rep.I})
        except Exception as exc:  # noqa: BLE001
            _fail_row(report, suite, eps, exc)
        finally:
            bogovskii.clear_cache()
    _slope_rows(report, suite, series, config.tol("pressure_slope"), "bounded as eps -> 0", mode="min")
    if rows:
        eq = equi_integrability_report(rows)
        report.add(suite, "pressure_side_slope", None,
                   eq["lhs_slope"]["slope"] if eq["lhs_slope"]["slope"] != "n/a" else None, "info")
        report.add(suite, "bounded_by_sum", None, float(eq["bounded_by_sum"]), "info",
                   "balance not asserted on synthetic states")


def exponents(config, report: SweepReport) -> None:
    suite = "exponents"
    tol = config.tol("exponent_abs")
    for gamma in RR1_GAMMAS:
        rec = scaling_exponent_check(gamma, config.alpha, 0.0, 0.0)
        expected = gamma > 3.0
        report.add(suite, f"rr1_window_beta0:gamma{gamma:g}", None, float(rec["window_ok"]),
                   _verdict(rec["window_ok"] == expected), f"admissible iff gamma > 3 (expected {expected})")
    rec = scaling_exponent_check(2.0, 0.1, config.beta, config.beta_bar)
    err = abs(rec["s"] - 17.0 / 60.0)
    report.add(suite, "s(gamma=2,alpha=0.1)", None, rec["s"], _verdict(err <= tol), "expected 17/60")
    rec = scaling_exponent_check(2.0, 0.0, 1.5, 1.9)
    report.add(suite, "fluid_exponent(2,0,1.5,1.9)", None, rec["fluid_exponent"],
               _verdict(abs(rec["fluid_exponent"] - 0.25) <= tol), "expected 1/4")
    for beta in (0.0, 1.0, 1.8):
        rec = scaling_exponent_check(4.0, 0.1, beta, beta)
        eps_list = [1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64]
        # direct substitution: |Y| at the ceiling saturates the kinetic energy bound
        worst = 0.0
        ceilings = []
        for eps in eps_list:
            Y = [eps ** ((beta - 3.0) / 2.0), 0.0, 0.0]
            b = rigid_velocity_bound(eps**-beta, eps, Y)
            worst = max(worst, abs(b["value"] - 1.0))
            ceilings.append(b["ceiling"])
        fit = fit_slope(eps_list, ceilings)
        ok = worst <= tol and abs(fit.slope - rec["velocity_exponent"]) <= tol
        ok = ok and abs(rec["velocity_exponent"] - (beta - 3.0) / 2.0) <= tol
        report.add(suite, f"ceiling_exponent:beta{beta:g}", None, fit.slope, _verdict(ok),
                   f"expected {(beta - 3.0) / 2.0:g}")
    rec = scaling_exponent_check(config.gamma, config.alpha, config.beta, config.beta_bar)
    for key in ("s", "fluid_exponent", "body_exponent", "velocity_exponent"):
        report.add(suite, f"config:{key}", None, rec[key], "info")
    report.add(suite, "config:window_ok", None, float(rec["window_ok"]), "info")


SUITE_FUNCS = {
    "verify-e": verify_e,
    "verify-bogovskii": verify_bogovskii,
    "verify-r": verify_r,
    "verify-ep2": verify_ep2,
    "pressure-sweep": pressure_sweep,
    "exponents": exponents,
}


def run_sweep(config, suites=None) -> SweepReport:
    """Run the selected suites in a fixed order and collect one report."""
    from .. import __version__

    selected = [s for s in SUITE_FUNCS if s in (config.suites if suites is None else suites)]
    report = SweepReport(provenance={
        "config_sha256": config.digest(),
        "seed": int(config.seed),
        "version": __version__,
        "config": config.parameters(),
        "suites": selected,
    })
    report.warnings.extend(config.warnings)
    if not selected:
        report.warnings.append("no suites selected")
        return report
    for name in selected:
        log.info("running %s", name)
        try:
            SUITE_FUNCS[name](config, report)
        except Exception as exc:  # noqa: BLE001
            report.add(name, "error", None, None, "fail", f"{type(exc).__name__}: {exc}")
    return report
