from .config import DEFAULT_TOLERANCES, SUITES, SweepConfig
from .fixtures import FixtureSet, build_fixtures, generate_inputs
from .report import SlopeFit, SweepReport, emit_report, fit_loglog, fit_slope
from .suites import run_sweep

__all__ = [
    "DEFAULT_TOLERANCES",
    "FixtureSet",
    "SUITES",
    "SlopeFit",
    "SweepConfig",
    "SweepReport",
    "build_fixtures",
    "emit_report",
    "fit_loglog",
    "fit_slope",
    "generate_inputs",
    "run_sweep",
]
