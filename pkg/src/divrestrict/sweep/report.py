"""Slope fits and report emission (CSV, JSON, plot data)."""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

SCHEMA_VERSION = 1
MIN_POINTS = 3


@dataclass
class SlopeFit:
    slope: float | None
    intercept: float | None = None
    stderr: float | None = None
    ci95: float | None = None
    residual: float | None = None
    n: int = 0
    dropped: list = field(default_factory=list)
    note: str = ""

    @property
    def available(self) -> bool:
        return self.slope is not None

    def as_dict(self) -> dict:
        d = asdict(self)
        if self.slope is None:
            d["slope"] = "n/a"
        return d


def fit_loglog(points) -> SlopeFit:
    """Least-squares line through (log eps, log value) points."""
    pts = [(float(a), float(b)) for a, b in points]
    if len(pts) < MIN_POINTS:
        return SlopeFit(None, n=len(pts), note=f"n/a: {len(pts)} points, need {MIN_POINTS}")
    x = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if np.ptp(x) == 0:
        return SlopeFit(None, n=len(pts), note="n/a: all abscissae equal")
    fit = stats.linregress(x, y)
    dof = len(pts) - 2
    resid = y - (fit.intercept + fit.slope * x)
    rms = float(np.sqrt(np.mean(resid**2)))
    if dof > 0:
        ci = float(stats.t.ppf(0.975, dof) * fit.stderr)
    else:
        ci = 0.0
    return SlopeFit(float(fit.slope), float(fit.intercept), float(fit.stderr), ci, rms, len(pts))


def fit_slope(eps, values) -> SlopeFit:
    """Slope of log(value) against log(eps); nonpositive or non-finite values are dropped."""
    pts, dropped = [], []
    for e, v in zip(eps, values):
        if v is None or not np.isfinite(v) or v <= 0 or e <= 0:
            dropped.append(float(e))
            continue
        pts.append((math.log(e), math.log(v)))
    out = fit_loglog(pts)
    out.dropped = dropped
    if dropped:
        out.note = (out.note + "; " if out.note else "") + f"dropped {len(dropped)} nonpositive value(s)"
    return out


@dataclass
class Row:
    suite: str
    quantity: str
    eps: float | None
    value: float | None
    verdict: str
    detail: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class SweepReport:
    rows: list = field(default_factory=list)
    slopes: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def add(self, suite, quantity, eps, value, verdict="info", detail="") -> Row:
        row = Row(suite, quantity, None if eps is None else float(eps), _clean(value), verdict, detail)
        self.rows.append(row)
        return row

    def add_slope(self, suite, quantity, fit: SlopeFit, verdict: str, criterion: str = "") -> None:
        self.slopes.append({"suite": suite, "quantity": quantity, "fit": fit.as_dict(), "verdict": verdict,
                            "criterion": criterion})
        self.add(suite, f"slope:{quantity}", None, fit.slope if fit.available else None, verdict,
                 criterion or fit.note)

    def failed(self) -> list:
        return [r for r in self.rows if r.verdict == "fail"]

    @property
    def ok(self) -> bool:
        return not any(r.verdict == "fail" for r in self.rows)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "provenance": self.provenance,
            "rows": [r.as_dict() for r in self.rows],
            "slopes": self.slopes,
            "warnings": list(self.warnings),
            "ok": self.ok,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SweepReport":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {data.get('schema_version')}")
        rep = cls(provenance=data.get("provenance", {}), warnings=list(data.get("warnings", [])),
                  slopes=list(data.get("slopes", [])))
        rep.rows = [Row(**r) for r in data.get("rows", [])]
        return rep


def _clean(value):
    if value is None:
        return None
    if isinstance(value, (bool, np.bool_)):
        return float(bool(value))
    v = float(value)
    return v if math.isfinite(v) else None


def emit_report(report: SweepReport, out_dir, formats=("csv", "json", "plots")) -> list:
    """Write report.csv, report.json and plots/<suite>.dat; returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "json" in formats:
        path = os.path.join(out_dir, "report.json")
        with open(path, "w") as fh:
            json.dump(report.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    if "csv" in formats:
        path = os.path.join(out_dir, "report.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["suite", "quantity", "eps", "value", "verdict", "detail"])
            for r in report.rows:
                w.writerow([r.suite, r.quantity, "" if r.eps is None else repr(r.eps),
                            "" if r.value is None else repr(r.value), r.verdict, r.detail])
        written.append(path)
    if "plots" in formats:
        pdir = os.path.join(out_dir, "plots")
        os.makedirs(pdir, exist_ok=True)
        by_suite = {}
        for r in report.rows:
            if r.eps is None or r.value is None or r.value <= 0:
                continue
            by_suite.setdefault(r.suite, {}).setdefault(r.quantity, []).append((r.eps, r.value))
        for suite, series in sorted(by_suite.items()):
            path = os.path.join(pdir, f"{suite}.dat")
            with open(path, "w") as fh:
                for name, pts in sorted(series.items()):
                    fh.write(f"# {name}\n# log_eps log_value\n")
                    for e, v in pts:
                        fh.write(f"{math.log(e):.17g} {math.log(v):.17g}\n")
                    fh.write("\n\n")
            written.append(path)
    return written
