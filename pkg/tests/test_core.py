import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divrestrict.core import (
    Ball,
    BallGeometry,
    Grid,
    ScalarField,
    VectorField,
    ball_mean,
    divergence,
    gradient,
    jacobian,
    laplacian,
    load_field,
    lp_norm,
    perp_gradient,
    save_field,
    spectral_ball_mean,
)
from divrestrict.core.diff import curl
from divrestrict.errors import DegenerateRegionError, UnderResolvedError


def bandlimited(grid, seed, kmax=4):
    rng = np.random.default_rng(seed)
    x = grid.coords()
    out = np.zeros(grid.shape)
    for _ in range(5):
        k = rng.integers(-kmax, kmax + 1, grid.dim)
        out = out + rng.normal() * np.cos(sum(np.pi * kk * xi / grid.L for kk, xi in zip(k, x)) + rng.uniform(0, 6))
    return ScalarField(grid, out)


class TestGrid:
    def test_spacing_and_nodes(self):
        g = Grid(2, 64, 1.5)
        assert g.spacing == 3.0 / 64
        assert g.size == 64**2
        assert g.axis()[32] == 0.0

    @pytest.mark.parametrize("dim,n", [(1, 64), (4, 64), (2, 48), (2, 16)])
    def test_rejects_bad_parameters(self, dim, n):
        with pytest.raises(ValueError):
            Grid(dim, n)

    def test_ball_floor(self):
        g = Grid(2, 64)
        Ball((0.0, 0.0), 4 * g.spacing).validate(g)
        with pytest.raises(UnderResolvedError):
            Ball((0.0, 0.0), 3.9 * g.spacing).validate(g)

    def test_padding_flag(self):
        g = Grid(2, 64)
        assert Ball((0.0, 0.0), 0.25).padding_ok(g)
        assert not Ball((0.5, 0.0), 0.25).padding_ok(g)

    def test_geometry_radius(self):
        g = Grid(2, 64)
        geo = BallGeometry(g, Ball((0.013, -0.02), 0.2))
        x, y = g.coords()
        r = np.hypot(x - 0.013, y + 0.02)
        near = r < 0.8
        assert np.allclose(geo.r[near], r[near], atol=1e-12)


class TestFields:
    def test_immutable_and_finite(self):
        g = Grid(2, 32)
        f = ScalarField(g, np.ones(g.shape))
        with pytest.raises(ValueError):
            f.values[0, 0] = 2.0
        with pytest.raises(ValueError):
            ScalarField(g, np.full(g.shape, np.nan))
        with pytest.raises(ValueError):
            VectorField(g, np.ones(g.shape))

    def test_arithmetic(self):
        g = Grid(2, 32)
        f = ScalarField(g, np.ones(g.shape))
        assert np.all((2.0 * f - f / 2.0).values == 1.5)


class TestDerivatives:
    def test_constant_gradient_zero(self):
        g = Grid(2, 64)
        f = ScalarField(g, np.full(g.shape, 3.0))
        for scheme in ("spectral", "central", "forward"):
            assert np.all(gradient(f, scheme).values == 0.0)

    def test_sine_spectral(self):
        g = Grid(2, 64)
        x, y = g.coords()
        f = ScalarField(g, np.broadcast_to(np.sin(np.pi * x), g.shape))
        gr = gradient(f, "spectral").values
        assert np.abs(gr[0] - np.pi * np.cos(np.pi * x)).max() < 1e-12
        assert np.abs(gr[1]).max() < 1e-12

    def test_central_product_rule(self):
        # box wide enough that the bump is periodic to rounding
        g = Grid(2, 512, 3.0)
        x, y = g.coords()
        bump = np.exp(-(x**2 + y**2) / 0.5)
        f = ScalarField(g, x * bump)
        exact = np.stack([bump + x * bump * (-2 * x / 0.5), x * bump * (-2 * y / 0.5)])
        err = np.abs(gradient(f, "central").values - exact).max()
        assert err <= 10 * g.spacing**2

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**31))
    def test_div_grad_is_laplacian(self, seed):
        g = Grid(2, 32)
        f = bandlimited(g, seed)
        lhs = divergence(gradient(f, "spectral"), "spectral").values
        assert np.abs(lhs - laplacian(f, "spectral").values).max() < 1e-10

    def test_perp_gradient_and_curl_divergence_free(self):
        g = Grid(2, 64)
        f = bandlimited(g, 3)
        assert np.abs(divergence(perp_gradient(f), "central").values).max() < 1e-12
        g3 = Grid(3, 32)
        a = VectorField(g3, np.stack([bandlimited(g3, s).values for s in range(3)]))
        assert np.abs(divergence(curl(a), "central").values).max() < 1e-11

    def test_jacobian_layout(self):
        g = Grid(2, 32)
        x, y = g.coords()
        v = VectorField(g, np.stack([np.broadcast_to(np.sin(np.pi * y), g.shape), np.zeros(g.shape)]))
        J = jacobian(v, "spectral").values
        assert np.abs(J[0, 1] - np.pi * np.cos(np.pi * y)).max() < 1e-12
        assert np.abs(J[0, 0]).max() < 1e-12


class TestNorms:
    def test_volume(self):
        g = Grid(3, 32, 0.5)
        assert lp_norm(ScalarField(g, np.ones(g.shape)), 1) == pytest.approx(1.0, rel=1e-14)

    def test_zero_and_homogeneity(self):
        g = Grid(2, 32)
        f = bandlimited(g, 1)
        assert lp_norm(ScalarField.zeros(g), 2) == 0.0
        for p in (1.0, 1.5, 2.0, 3.0, np.inf):
            assert lp_norm(f * -2.5, p) == pytest.approx(2.5 * lp_norm(f, p), rel=1e-14)

    def test_bump_against_analytic(self):
        g = Grid(2, 64)
        x, y = g.coords()
        f = ScalarField(g, np.exp(-(x**2 + y**2) / 0.05))
        # |f|_2^2 = pi * 0.05 / 2
        assert lp_norm(f, 2) == pytest.approx(np.sqrt(np.pi * 0.025), rel=0.01)

    def test_region_additivity(self):
        g = Grid(2, 128)
        f = bandlimited(g, 7)
        b = Ball((0.01, 0.02), 0.2)
        for p in (1.5, 2.0, 3.0):
            parts = lp_norm(f, p, "ball", b) ** p + lp_norm(f, p, "complement", b) ** p
            assert parts == pytest.approx(lp_norm(f, p) ** p, rel=1e-12)

    def test_degenerate_region(self):
        g = Grid(2, 64)
        with pytest.raises(DegenerateRegionError, match="degenerate region"):
            lp_norm(ScalarField.zeros(g), 2, ("shell", 1.0, 1.0001), Ball((0.0, 0.0), 0.2))


class TestBallMean:
    def test_constant_exact(self):
        g = Grid(3, 64)
        b = Ball((0.0123, -0.04, 0.031), 0.2)
        assert ball_mean(ScalarField(g, np.full(g.shape, 1.7)), b) == 1.7

    @pytest.mark.parametrize("dim", [2, 3])
    def test_quadratic(self, dim):
        g = Grid(dim, 128 if dim == 2 else 64)
        c = (0.0117, -0.0213, 0.005)[:dim]
        b = Ball(c, 0.2)
        x = g.coords()
        f = ScalarField(g, sum((xi - ci) ** 2 for xi, ci in zip(x, c)))
        exact = dim / (dim + 2) * 0.2**2
        assert ball_mean(f, b) == pytest.approx(exact, rel=2e-2)
        assert ball_mean(f, b, method="spectral") == pytest.approx(exact, rel=2e-2)

    def test_linear_gives_center_value(self):
        g = Grid(2, 128)
        b = Ball((0.0117, -0.0213), 0.15)
        x, y = g.coords()
        f = ScalarField(g, np.broadcast_to(0.3 * x - 1.1 * y, g.shape))
        # quadrature tolerance |a| h^2 from the cut cells
        tol = np.hypot(0.3, 1.1) * g.spacing**2
        assert ball_mean(f, b) == pytest.approx(0.3 * 0.0117 + 1.1 * 0.0213, abs=tol)

    @settings(max_examples=15, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_affine_in_field(self, alpha, c):
        g = Grid(2, 64)
        b = Ball((0.01, -0.02), 0.15)
        f = bandlimited(g, 5)
        lhs = ball_mean(f * alpha + c, b)
        assert lhs == pytest.approx(alpha * ball_mean(f, b) + c, abs=1e-12 * (1 + abs(alpha) + abs(c)))

    def test_vector_and_spectral_agree(self):
        g = Grid(2, 128)
        b = Ball((0.01, -0.02), 0.15)
        f = bandlimited(g, 9, kmax=2)
        v = VectorField(g, np.stack([f.values, 2 * f.values]))
        m = ball_mean(v, b)
        assert m.shape == (2,)
        assert m[1] == pytest.approx(2 * m[0], rel=1e-13)
        assert spectral_ball_mean(f, b) == pytest.approx(m[0], abs=2e-3)

    def test_under_resolved(self):
        g = Grid(2, 32)
        with pytest.raises(UnderResolvedError):
            ball_mean(ScalarField.zeros(g), Ball((0.0, 0.0), 0.1))


def test_snapshot_roundtrip(tmp_path):
    g = Grid(2, 32, 0.75)
    v = VectorField(g, np.stack([bandlimited(g, 1).values, bandlimited(g, 2).values]))
    path = tmp_path / "v.drf"
    save_field(path, v)
    head = path.read_bytes().split(b"\n", 1)[0]
    assert head == b"DRFIELD v1 dim=2 n=32 L=0.75 rank=1 ncomp=2 dtype=float64-le"
    back = load_field(path)
    assert isinstance(back, VectorField)
    assert back.grid == g
    assert np.array_equal(back.values, v.values)


def test_snapshot_rejects_garbage(tmp_path):
    path = tmp_path / "bad"
    path.write_bytes(b"NOPE\n")
    with pytest.raises(ValueError):
        load_field(path)
