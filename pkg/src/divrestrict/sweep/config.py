"""Sweep configuration: a JSON key-value file with a fixed schema.

Keys (all optional; defaults in parentheses):

    dim          2 or 3                               (2)
    n            grid points per axis, power of two   (1024 for d=2, 128 for d=3)
    L            half box length                      (1.0)
    eps          ball radii, strictly descending      ([L/8, L/16, L/32, L/64] for d=2,
                                                       [3L/16, L/8, L/16] for d=3)
    center       ball center                          (a fixed off-node point)
    suites       suite names to run                   (all of them)
    gamma, alpha, beta, beta_bar                      (2.0, 0.1, 1.8, 1.8)
    allow_window_override   run outside the admissible (beta, beta_bar) window
                            with a warning instead of an error (false)
    tolerances   overrides of DEFAULT_TOLERANCES      ({})
    bogovskii_3d run annulus solves in three dimensions (false; very slow)
    out          output directory                     ("sweep-out")
    seed         fixture seed, unsigned 64-bit        (0)
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

from ..core.grid import RESOLUTION_FLOOR, Grid

SUITES = ("verify-e", "verify-bogovskii", "verify-r", "verify-ep2", "pressure-sweep", "exponents")

DEFAULT_TOLERANCES = {
    "e_slope": 0.10,
    "solver_slope": 0.15,
    "pressure_slope": -0.10,
    "poincare_drift": 0.05,
    "bogovskii_drift": 0.05,
    "fd_relative": 1e-3,
    "bogovskii_residual": 1e-8,
    "div_relative": 1e-7,
    "div_floor": 1e-10,
    "exponent_abs": 1e-12,
}

_DEFAULT_CENTER = (0.0031, -0.0017, 0.0011)


def admissible(gamma: float, beta: float, beta_bar: float) -> bool:
    lo = 2.0 * (3.0 - gamma) / gamma
    return lo < beta <= beta_bar < 2.0


@dataclass
class SweepConfig:
    dim: int = 2
    n: int | None = None
    L: float = 1.0
    eps: list | None = None
    center: list | None = None
    suites: list = field(default_factory=lambda: list(SUITES))
    gamma: float = 2.0
    alpha: float = 0.1
    beta: float = 1.8
    beta_bar: float = 1.8
    allow_window_override: bool = False
    tolerances: dict = field(default_factory=dict)
    bogovskii_3d: bool = False
    out: str = "sweep-out"
    seed: int = 0
    warnings: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        if self.n is None:
            self.n = 1024 if self.dim == 2 else 128
        if self.eps is None:
            # in 3D, L/32 would sit under the resolution floor at n = 128
            k = (8, 16, 32, 64) if self.dim == 2 else (16 / 3, 8, 16)
            self.eps = [self.L / d for d in k]
        if self.center is None:
            self.center = list(_DEFAULT_CENTER[: self.dim])
        self.eps = [float(e) for e in self.eps]
        self.center = [float(c) for c in self.center]
        self.tolerances = {**DEFAULT_TOLERANCES, **(self.tolerances or {})}
        self.warnings = []
        self.validate()

    def validate(self) -> None:
        grid = self.grid()
        unknown = [s for s in self.suites if s not in SUITES]
        if unknown:
            raise ValueError(f"unknown suite(s): {', '.join(unknown)}")
        unknown = [k for k in self.tolerances if k not in DEFAULT_TOLERANCES]
        if unknown:
            raise ValueError(f"unknown tolerance key(s): {', '.join(unknown)}")
        if len(self.center) != self.dim:
            raise ValueError("center must have one coordinate per dimension")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if any(b >= a for a, b in zip(self.eps, self.eps[1:])):
            raise ValueError("eps list must be strictly descending")
        floor = RESOLUTION_FLOOR * grid.spacing
        low = [e for e in self.eps if e < floor * (1 - 1e-12)]
        if low:
            raise ValueError(f"eps {low} below the resolution floor {floor:g} ({RESOLUTION_FLOOR:g} cells)")
        if self.gamma <= 1.5:
            raise ValueError("outside existence theory: gamma must exceed 3/2")
        if not 0 < self.alpha or 3.0 * self.alpha >= self.gamma:
            raise ValueError("alpha must be positive with gamma / alpha > 3 (elliptic range)")
        if not admissible(self.gamma, self.beta, self.beta_bar):
            msg = (f"(beta, beta_bar) = ({self.beta}, {self.beta_bar}) outside the admissible window "
                   f"for gamma = {self.gamma}")
            if not self.allow_window_override:
                raise ValueError(msg)
            self.warnings.append(msg + " (overridden)")

    def grid(self) -> Grid:
        return Grid(self.dim, self.n, self.L)

    def center_for(self, grid: Grid) -> tuple:
        return tuple(self.center)

    def tol(self, key: str) -> float:
        return float(self.tolerances[key])

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("warnings")
        return d

    def parameters(self) -> dict:
        """Everything that can change a result; the output location cannot."""
        d = self.to_dict()
        d.pop("out")
        return d

    def digest(self) -> str:
        text = json.dumps(self.parameters(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def replace(self, **changes) -> "SweepConfig":
        d = self.to_dict()
        d.update(changes)
        return SweepConfig(**d)

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = {f.name for f in fields(cls)} - {"warnings"}
        extra = sorted(set(data) - known)
        if extra:
            raise ValueError(f"unknown config key(s): {', '.join(extra)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "SweepConfig":
        with open(path) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        return cls.from_dict(data)
