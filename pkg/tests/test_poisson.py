import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divrestrict.core import Ball, BallGeometry, Grid, ScalarField, VectorField, gradient, laplacian, lp_norm
from divrestrict.core.diff import divergence, perp_gradient
from divrestrict.poisson import SpectralSolver, compensate, parity_classes

G = Grid(2, 64)
S = SpectralSolver(G)


def bandlimited(grid, seed, kmax=5):
    rng = np.random.default_rng(seed)
    x = grid.coords()
    out = np.zeros(grid.shape)
    for _ in range(6):
        k = rng.integers(-kmax, kmax + 1, grid.dim)
        out = out + rng.normal() * np.cos(sum(np.pi * kk * xi / grid.L for kk, xi in zip(k, x)) + rng.uniform(0, 6))
    return ScalarField(grid, out)


def mode(grid, k):
    x = grid.coords()
    return ScalarField(grid, np.broadcast_to(np.cos(sum(np.pi * kk * xi for kk, xi in zip(k, x))), grid.shape))


def test_zero():
    z = ScalarField.zeros(G)
    assert np.all(S.inv_laplacian(z).values == 0.0)
    assert np.all(S.grad_inv_laplacian(z).values == 0.0)
    assert np.all(S.hessian_inv_laplacian(z).values == 0.0)


def test_single_mode():
    f = mode(G, (2, 3))
    k2 = np.pi**2 * 13
    assert np.abs(S.inv_laplacian(f).values + f.values / k2).max() < 1e-14
    x, y = G.coords()
    ph = np.pi * (2 * x + 3 * y)
    gr = S.grad_inv_laplacian(f).values
    assert np.abs(gr[0] - 2 * np.pi * np.sin(ph) / k2).max() < 1e-14
    hess = S.hessian_inv_laplacian(f)
    assert lp_norm(hess, 2.0) / lp_norm(f, 2.0) == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31))
def test_inverse_of_laplacian(seed):
    g = bandlimited(G, seed)
    g = g - float(g.values.mean())
    back = S.inv_laplacian(laplacian(g))
    assert np.abs(back.values - g.values).max() < 1e-12 * max(1.0, np.abs(g.values).max())


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31))
def test_identities(seed):
    f = bandlimited(G, seed)
    fm = f.values - f.values.mean()
    div = S.divergence(S.grad_inv_laplacian(f)).values
    assert np.abs(div - fm).max() < 1e-12 * np.abs(fm).max()
    hess = S.hessian_inv_laplacian(f)
    # true inverse: the trace is +(f - mean)
    assert np.abs(hess.trace().values - fm).max() < 1e-12 * np.abs(fm).max()
    assert np.array_equal(hess.values[0, 1], hess.values[1, 0])
    # Frobenius multiplier norm is one: Parseval equality at p = 2
    assert lp_norm(hess, 2.0) == pytest.approx(lp_norm(ScalarField(G, fm), 2.0), rel=1e-10)


class TestRiesz:
    def test_divergence_free_maps_to_zero(self):
        v = perp_gradient(bandlimited(G, 4), "spectral")
        assert np.abs(S.riesz_right_inverse(v).values).max() < 1e-12

    def test_gradient_fixed(self):
        f = bandlimited(G, 5)
        gr = gradient(f)
        assert np.abs(S.riesz_right_inverse(gr).values - gr.values).max() < 1e-12

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**31))
    def test_right_inverse(self, seed):
        g = VectorField(G, np.stack([bandlimited(G, seed).values, bandlimited(G, seed + 1).values]))
        lhs = divergence(S.riesz_right_inverse(g)).values
        rhs = divergence(g).values
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)

    def test_central_scheme(self):
        C = SpectralSolver(G, "central")
        rng = np.random.default_rng(3)
        g = VectorField(G, rng.normal(size=(2,) + G.shape))
        out = C.riesz_right_inverse(g)
        lhs = C.divergence(out).values
        rhs = C.divergence(g).values
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)
        for q in (1.5, 2.0, 3.0):
            assert lp_norm(out, q) <= 3.0 * lp_norm(g, q)

    def test_linear(self):
        a = VectorField(G, np.stack([bandlimited(G, 1).values, bandlimited(G, 2).values]))
        b = VectorField(G, np.stack([bandlimited(G, 3).values, bandlimited(G, 4).values]))
        lhs = S.riesz_right_inverse(a * 2.0 + b).values
        rhs = 2.0 * S.riesz_right_inverse(a).values + S.riesz_right_inverse(b).values
        assert np.abs(lhs - rhs).max() < 1e-12


class TestEllipticReport:
    def test_bump_ratio(self):
        x, y = G.coords()
        b = ScalarField(G, np.exp(-(x**2 + y**2) / 0.02))
        rep = S.elliptic_bound_report(b, 2.0)
        assert rep["hessian_ratio"] <= 1.0 + 1e-12
        assert set(rep["grad_norms"]) == {2.0, 3.0, np.inf}

    def test_zero_raises(self):
        with pytest.raises(ValueError):
            S.elliptic_bound_report(ScalarField.zeros(G), 2.0)


class TestSink:
    def test_compensate_keeps_ball_and_kills_null_space(self):
        g = Grid(2, 128)
        x, y = g.coords()
        f = ScalarField(g, 1.0 + np.exp(-((x - 0.5) ** 2 + y**2) / 0.01))
        ball = Ball((0.01, -0.02), 0.1)
        c = compensate(f, ball)
        rho = BallGeometry(g, ball).rho
        assert np.array_equal(c.values[rho <= 2.25], f.values[rho <= 2.25])
        for cls in parity_classes(g):
            assert abs(c.values[cls].sum()) < 1e-10 * np.abs(f.values).sum()

    def test_sink_potential_divergence(self):
        g = Grid(2, 128)
        x, y = g.coords()
        f = ScalarField(g, np.exp(-((x - 0.5) ** 2 + y**2) / 0.01))
        ball = Ball((0.01, -0.02), 0.1)
        C = SpectralSolver(g, "central")
        pot = C.grad_inv_laplacian(f, sink=ball)
        div = C.divergence(pot).values
        assert np.abs(div - compensate(f, ball).values).max() < 1e-12
        rho = BallGeometry(g, ball).rho
        # near the ball the divergence is f itself, not f minus a mean
        near = rho <= 2.25
        assert np.abs(div[near] - f.values[near]).max() < 1e-12
