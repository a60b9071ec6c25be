import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divrestrict.core import Ball, BallGeometry, Grid
from divrestrict.restrict_r import central_divergence
from divrestrict.sweep import (
    SweepConfig,
    SweepReport,
    build_fixtures,
    emit_report,
    fit_slope,
    generate_inputs,
    run_sweep,
)
from divrestrict.sweep.cli import main

EPS = [0.5, 0.25, 0.125, 0.0625]


class TestFit:
    @given(st.floats(-3, 3), st.floats(0.1, 10))
    def test_exact_power_law(self, k, c):
        fit = fit_slope(EPS, [c * e**k for e in EPS])
        assert abs(fit.slope - k) <= 1e-12 * max(1.0, abs(k))
        assert fit.residual < 1e-12

    def test_constant(self):
        fit = fit_slope(EPS, [3.0] * 4)
        assert abs(fit.slope) < 1e-14

    def test_noisy(self):
        rng = np.random.default_rng(1)
        eps = np.geomspace(0.5, 1 / 64, 6)
        vals = 2.0 * eps**0.7 * (1 + 0.01 * rng.normal(size=eps.size))
        fit = fit_slope(eps, vals)
        assert abs(fit.slope - 0.7) <= 0.02
        assert fit.ci95 > 0

    def test_too_few_points(self):
        fit = fit_slope([0.5, 0.25], [1.0, 2.0])
        assert not fit.available and fit.as_dict()["slope"] == "n/a"

    def test_drops_nonpositive(self):
        fit = fit_slope(EPS, [1.0, 0.0, -2.0, 4.0])
        assert len(fit.dropped) == 2 and not fit.available and fit.note
        fit = fit_slope(EPS, [0.5, 0.25, float("nan"), 0.0625])
        assert fit.slope == pytest.approx(1.0, abs=1e-12) and fit.dropped == [0.125]


class TestReport:
    def make(self):
        rep = SweepReport(provenance={"seed": 3})
        rep.add("verify-e", "e0", 0.5, 1.25, "pass", "ok")
        rep.add("verify-e", "e0", 0.25, float("nan"), "fail", "bad")
        rep.add_slope("verify-e", "e0", fit_slope(EPS, [e**2 for e in EPS]), "info")
        rep.warnings.append("careful")
        return rep

    def test_round_trip(self, tmp_path):
        rep = self.make()
        emit_report(rep, tmp_path)
        text = (tmp_path / "report.json").read_text()
        data = json.loads(text)
        assert data["schema_version"] == 1 and data["ok"] is False
        back = SweepReport.from_json(data)
        assert back.to_json() == data
        assert text.endswith("\n")

    def test_csv_and_plots(self, tmp_path):
        rep = self.make()
        emit_report(rep, tmp_path)
        with open(tmp_path / "report.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["suite", "quantity", "eps", "value", "verdict", "detail"]
        assert len(rows) == len(rep.rows) + 1
        assert (tmp_path / "plots" / "verify-e.dat").read_text().startswith("# ")

    def test_failed(self):
        rep = self.make()
        assert [r.quantity for r in rep.failed()] == ["e0"] and not rep.ok
        assert rep.failed()[0].value is None


class TestConfig:
    def test_defaults(self):
        cfg = SweepConfig()
        assert cfg.n == 1024 and cfg.eps == [0.125, 0.0625, 0.03125, 0.015625]
        assert SweepConfig(dim=3).n == 128

    @pytest.mark.parametrize("change,match", [
        ({"suites": ["nope"]}, "unknown suite"),
        ({"tolerances": {"zzz": 1}}, "unknown tolerance"),
        ({"center": [0.0]}, "center"),
        ({"seed": -1}, "seed"),
        ({"eps": [0.1, 0.2]}, "descending"),
        ({"n": 64, "eps": [0.125, 0.01]}, "resolution floor"),
        ({"gamma": 1.5}, "outside existence theory"),
        ({"beta": 0.5, "beta_bar": 0.5}, "admissible window"),
        ({"alpha": 0.7}, "elliptic range"),
        ({"alpha": 0.0}, "elliptic range"),
    ])
    def test_rejects(self, change, match):
        with pytest.raises(ValueError, match=match):
            SweepConfig(**{"n": 128, "eps": [0.25, 0.125], **change})

    def test_window_override_warns(self):
        cfg = SweepConfig(n=128, eps=[0.25], beta=0.5, beta_bar=0.5, allow_window_override=True)
        assert any("overridden" in w for w in cfg.warnings)

    def test_digest_and_unknown_key(self, tmp_path):
        a = SweepConfig(n=128, eps=[0.25])
        assert a.digest() == SweepConfig(n=128, eps=[0.25]).digest()
        assert a.digest() != a.replace(seed=1).digest()
        assert a.digest() == a.replace(out="elsewhere").digest()
        with pytest.raises(ValueError, match="unknown config key"):
            SweepConfig.from_dict({"n": 128, "colour": 1})
        path = tmp_path / "c.json"
        path.write_text(json.dumps(a.to_dict()))
        assert SweepConfig.load(path) == a


class TestFixtures:
    G = Grid(2, 128)
    BALL = Ball((0.0031, -0.0017), 0.125)

    def test_deterministic(self):
        a = build_fixtures(self.G, self.BALL, seed=7)
        b = build_fixtures(self.G, self.BALL, seed=7)
        c = build_fixtures(self.G, self.BALL, seed=8)
        assert np.array_equal(a.scalars[0].values, b.scalars[0].values)
        assert not np.array_equal(a.scalars[0].values, c.scalars[0].values)

    def test_divergence_free(self):
        fx = build_fixtures(self.G, self.BALL, seed=0)
        v = fx.divfree[0]
        scale = np.abs(v.values).max() / self.G.spacing
        assert np.abs(central_divergence(v).values).max() <= 1e-10 * scale
        # the added gradient vanishes on B_{1.45 eps}; the wide stencil reaches two cells in
        rho = BallGeometry(self.G, self.BALL).rho
        div1 = central_divergence(fx.divfree[1]).values
        assert np.abs(div1[rho <= 1.2]).max() <= 1e-10 * scale
        assert np.abs(div1).max() > 1e-3 * scale

    def test_padding(self):
        with pytest.raises(ValueError, match="padding"):
            build_fixtures(Grid(2, 64, 1.0), Ball((0.3, 0.0), 0.2), seed=0)

    def test_generate_inputs_keys(self):
        cfg = SweepConfig(n=128, eps=[0.2, 0.125])
        assert sorted(generate_inputs(cfg)) == [0.125, 0.2]


SMALL = dict(n=128, eps=[0.2, 0.125], center=[0.0031, -0.0017])


@pytest.fixture(scope="module")
def small_report():
    return run_sweep(SweepConfig(**SMALL, suites=["verify-e", "exponents"]))


def test_empty_selection_warns():
    rep = run_sweep(SweepConfig(**SMALL, suites=[]))
    assert rep.rows == [] and any("no suites" in w for w in rep.warnings)


def test_two_eps_slopes_are_na(small_report):
    slopes = [s for s in small_report.slopes if s["suite"] == "verify-e"]
    assert slopes and all(s["fit"]["slope"] == "n/a" for s in slopes)
    assert small_report.provenance["config_sha256"] == SweepConfig(**SMALL, suites=["verify-e", "exponents"]).digest()


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2**64 - 1))
def test_any_u64_seed_builds(seed):
    fx = build_fixtures(Grid(2, 64), Ball((0.0, 0.0), 0.25), seed=seed)
    assert np.isfinite(fx.scalars[0].values).all()


class TestCli:
    def test_small_run(self, tmp_path, capsys):
        code = main(["exponents", "--n", "128", "--eps", "0.2,0.125", "--out", str(tmp_path)])
        assert code == 0
        data = json.loads((tmp_path / "report.json").read_text())
        assert data["ok"] and data["provenance"]["config"]["suites"] == ["exponents"]
        assert "0 failed" in capsys.readouterr().out

    def test_bad_eps(self, tmp_path, capsys):
        assert main(["verify-e", "--eps", "0.1,0.2", "--n", "128", "--out", str(tmp_path)]) == 2
        assert "descending" in capsys.readouterr().err

    def test_strict_warning(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({**SMALL, "beta": 0.5, "beta_bar": 0.5, "allow_window_override": True}))
        args = ["exponents", "--config", str(cfg), "--out", str(tmp_path / "o")]
        assert main(args) == 0
        assert main(args + ["--strict"]) == 1

    def test_seed_hex(self, tmp_path):
        assert main(["exponents", "--n", "128", "--eps", "0.25", "--seed", "0xff", "--out", str(tmp_path)]) == 0
        assert json.loads((tmp_path / "report.json").read_text())["provenance"]["seed"] == 255
