"""Command-line driver for the eps sweeps."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import SUITES, SweepConfig
from .report import emit_report
from .suites import run_sweep

COMMANDS = SUITES + ("all",)


def _eps_list(text: str) -> list:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad eps list {text!r}") from exc
    if not vals:
        raise argparse.ArgumentTypeError("empty eps list")
    return vals


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="divrestrict", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run {'every suite' if name == 'all' else 'the ' + name + ' suite'}")
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=_seed, help="fixture seed")
        p.add_argument("--eps", type=_eps_list, help="comma-separated ball radii, descending")
        p.add_argument("--dim", type=int, choices=(2, 3))
        p.add_argument("--n", type=int, help="grid points per axis")
        p.add_argument("--json", action="store_true", help="print report.json to stdout")
        p.add_argument("--strict", action="store_true", help="fail on any warning")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def make_config(args) -> SweepConfig:
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
    if args.dim is not None and args.dim != data.get("dim", 2):
        data["dim"] = args.dim
        if not args.config:
            data.pop("n", None)
    for key in ("out", "seed", "eps", "n"):
        val = getattr(args, key)
        if val is not None:
            data[key] = val
    if args.command != "all":
        data["suites"] = [args.command]
    return SweepConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = make_config(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    report = run_sweep(config)
    try:
        emit_report(report, config.out)
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return 2
    if args.json:
        json.dump(report.to_json(), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    failed = report.failed()
    for row in failed:
        print(f"FAIL {row.suite} {row.quantity} eps={row.eps} value={row.value} {row.detail}", file=sys.stderr)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if not args.json:
        print(f"{len(report.rows)} rows, {len(failed)} failed, {len(report.warnings)} warning(s); "
              f"report in {config.out}")
    if failed or (args.strict and report.warnings):
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
