"""Command-line front end: single runs, parameter sweeps, comparison reports."""

from __future__ import annotations

import argparse
import sys

from uavnetsim.config import ConfigError, load_scenario
from uavnetsim.scenario import run_scenario
from uavnetsim.sweep import ReportError, compare_report, run_sweep

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_PARTIAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavnetsim",
        description="Discrete-event simulation of network-assisted UAV operations.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one scenario once")
    sim.add_argument("--scenario", required=True, help="scenario config file")
    sim.add_argument("--seed", type=int, default=0, help="run seed (default 0)")
    sim.add_argument("--out", required=True, help="output directory for CSV tables")

    swp = sub.add_parser("sweep", help="run a parameter sweep across seeds")
    swp.add_argument("--scenario", required=True, help="base scenario config file")
    swp.add_argument("--param", required=True, help="config key to sweep")
    swp.add_argument("--values", required=True, help="comma-separated sweep values")
    swp.add_argument("--seeds", type=int, required=True, help="seeds per sweep value")
    swp.add_argument("--out", required=True, help="sweep output directory")

    rep = sub.add_parser("report", help="compare two sweep outputs point by point")
    rep.add_argument("--a", required=True, help="first sweep directory")
    rep.add_argument("--b", required=True, help="second sweep directory")
    return parser


def _cmd_simulate(args) -> int:
    cfg = load_scenario(args.scenario)
    result = run_scenario(cfg, args.seed, out_dir=args.out)
    print(f"run {result.run_id}: wrote {args.out}")
    for name, value in sorted(result.summary.metric_values().items()):
        print(f"  {name} = {value:.6g}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_scenario(args.scenario)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    outcome = run_sweep(cfg, args.param, values, args.seeds, args.out)
    total = len(values) * args.seeds
    done = total - len(outcome.failures)
    print(f"sweep {args.param} over {values}: {done}/{total} runs ok, "
          f"aggregate at {outcome.out_dir / 'aggregate.csv'}")
    if outcome.failures:
        for value, seed, msg in outcome.failures:
            print(f"  failed: {args.param}={value} seed={seed}: {msg}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_report(args) -> int:
    print(compare_report(args.a, args.b), end="")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"simulate": _cmd_simulate, "sweep": _cmd_sweep, "report": _cmd_report}
    try:
        return handlers[args.command](args)
    except (ConfigError, ReportError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
