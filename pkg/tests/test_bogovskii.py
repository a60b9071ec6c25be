import numpy as np
import pytest

from divrestrict import bogovskii
from divrestrict.bogovskii import (
    AnnulusProblem,
    energy_ratios,
    negative_form_apply,
    solve_bogovskii,
    uniformity_report,
)
from divrestrict.core import Ball, BallGeometry, Grid, ScalarField, VectorField, perp_gradient
from divrestrict.errors import UnderResolvedError
from divrestrict.sweep.fixtures import annulus_bump, bogovskii_sources, scaled_coords

G = Grid(2, 128)
BALL = Ball((0.0031, -0.0017), 0.125)


@pytest.fixture(scope="module")
def problem():
    return AnnulusProblem(G, BALL)


def source(grid, ball, k=0):
    return ScalarField(grid, bogovskii_sources(scaled_coords(grid, ball))[k])


def test_gap_floor():
    with pytest.raises(UnderResolvedError):
        AnnulusProblem(G, Ball((0.0, 0.0), 7 * G.spacing))


def test_active_set_rule(problem):
    r = BallGeometry(G, BALL).r
    h, eps = G.spacing, BALL.radius
    inset = bogovskii.INSET * h
    expected = (r > eps + inset) & (r < 2 * eps - inset)
    assert np.array_equal(problem.active, expected)


def test_zero_rhs(problem):
    v = solve_bogovskii(problem, ScalarField.zeros(G))
    assert np.all(v.values == 0.0)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_divergence_and_trace(problem, k):
    f = source(G, BALL, k)
    sol = solve_bogovskii(problem, f, full_output=True)
    assert sol.residual <= 1e-8
    assert np.all(sol.v.values[:, ~problem.active] == 0.0)
    div = problem.divergence(sol.v).values
    # div v = f minus its mean over each constraint component
    fac = problem.factor
    gap = problem._local(div - f.values)[fac.reach]
    on = fac.active[fac.reach]
    for c in range(fac.ncomp):
        vals = gap[on & (fac.labels == c)]
        assert np.ptp(vals) <= 1e-8 * np.abs(f.values).max()
    assert sol.projection < 0.01


def test_linearity(problem):
    f0, f1 = source(G, BALL, 0), source(G, BALL, 2)
    lhs = solve_bogovskii(problem, f0 * 2.0 + f1).values
    rhs = 2.0 * solve_bogovskii(problem, f0).values + solve_bogovskii(problem, f1).values
    assert np.abs(lhs - rhs).max() <= 1e-9 * np.abs(rhs).max()


def test_scaling_pair():
    g = Grid(2, 256)
    c = (0.0031, -0.0017)
    ratios = []
    for eps in (0.125, 0.0625):
        ball = Ball(c, eps)
        prob = AnnulusProblem(g, ball)
        ratios.append(energy_ratios(prob, source(g, ball), (2.0,))["ratios"][2.0])
    assert abs(ratios[0] / ratios[1] - 1.0) <= 0.05


class TestNegativeForm:
    def test_zero_skipped(self, problem):
        res = negative_form_apply(problem, VectorField.zeros(G))
        assert res.skipped and all(np.isnan(v) for v in res.ratios.values())

    def test_divergence_free_potential(self, problem):
        y = scaled_coords(G, BALL)
        stream = ScalarField(G, BALL.radius * annulus_bump(y, 1.2, 1.8))
        g = perp_gradient(stream, "central")
        res = negative_form_apply(problem, g)
        assert not res.skipped
        assert all(v <= 1e-6 for v in res.ratios.values())

    def test_masked_divergence_is_compatible(self, problem):
        rng = np.random.default_rng(0)
        g = VectorField(G, np.where(problem.active, rng.normal(size=(2,) + G.shape), 0.0))
        sums = problem.component_sums(problem.divergence(g).values)
        assert np.abs(sums).max() < 1e-9
        res = negative_form_apply(problem, g)
        assert res.solution.residual <= 1e-8


def test_uniformity_report_rows():
    g = Grid(2, 256)

    def fam(grid, ball):
        return source(grid, ball)

    def gfam(grid, ball):
        y = scaled_coords(grid, ball)
        return VectorField(grid, np.stack([annulus_bump(y), annulus_bump(y) * y[0]]))

    rows = uniformity_report([0.125, 0.0625], fam, g, g_family=gfam)
    assert len(rows) == 2
    assert set(rows[0]["energy"]) == {1.5, 2.0, 3.0}
    assert set(rows[0]["negative"]) == {1.5, 2.0, 3.0}
    with pytest.raises(ValueError):
        uniformity_report([], fam, g)
