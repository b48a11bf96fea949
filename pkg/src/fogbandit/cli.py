"""Command-line entry point.

Subcommands:
  run     execute the configured benchmark, write trace/summary CSVs and
          the companion figures into the output directory
  check   run the theory self-checks (determinant identities, confidence
          coverage, regret bound) and exit nonzero on failure
  version print the package version

Exit codes: 0 success, 1 configuration error, 2 numeric failure,
3 self-check failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import __version__
from .bench import (
    ConfigError,
    aggregate,
    export_summary_csv,
    export_trace_csv,
    load_config,
    run_checks,
    run_traces,
)
from .quadform import NumericsError

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_CHECK = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fogbandit",
        description="One-bit-feedback task-offloading bandit: simulator and benchmark.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the benchmark and write CSVs + figures")
    run_p.add_argument("--config", required=True, help="path to the JSON run configuration")
    run_p.add_argument(
        "--seed-override", type=int, default=None, metavar="N",
        help="replace the configured seed list with the single seed N",
    )
    run_p.add_argument(
        "--algorithms", default=None, metavar="a,b,...",
        help="comma-separated subset of algorithms to run",
    )
    run_p.add_argument(
        "--output", default=None, metavar="DIR", help="override the configured output directory"
    )

    check_p = sub.add_parser("check", help="run theory self-checks (exit 0 on pass)")
    check_p.add_argument("--config", required=True, help="path to the JSON run configuration")

    sub.add_parser("version", help="print the package version")
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    overrides = {}
    if args.seed_override is not None:
        overrides["seeds"] = (args.seed_override,)
    if args.algorithms is not None:
        overrides["algorithms"] = tuple(
            a.strip() for a in args.algorithms.split(",") if a.strip()
        )
    if args.output is not None:
        overrides["output_dir"] = args.output
    if overrides:
        try:
            cfg = dataclasses.replace(cfg, **overrides)
        except ConfigError:
            raise
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    results = run_traces(cfg)
    traces = {alg: [ep.records for ep in eps] for alg, eps in results.items()}
    summary = aggregate(traces, cfg)

    trace_path = export_trace_csv(traces, out_dir / "trace.csv")
    summary_path = export_summary_csv(summary, out_dir / "summary.csv")
    from .plots import render_summary_figures  # deferred: pulls in matplotlib

    figure_paths = render_summary_figures(summary, out_dir)

    final = summary.horizon - 1
    for alg, cur in summary.curves.items():
        print(
            f"{alg}: avg_regret={cur.mean_avg_regret[final]:.4f} "
            f"avg_reward={cur.mean_avg_reward[final]:.4f} "
            f"(T={summary.horizon}, seeds={len(cfg.seeds)})"
        )
    for path in (trace_path, summary_path, *figure_paths):
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_check(args) -> int:
    cfg = load_config(args.config)
    report = run_checks(cfg)
    print(
        f"determinant identities: {'pass' if report.identities_passed else 'FAIL'} "
        f"(max telescoping rel err {report.max_telescoping_rel_err:.3e}, "
        f"min inequality margin {report.min_inequality_margin:.6f})"
    )
    print(
        f"confidence coverage: "
        f"{'pass' if report.coverage_fraction >= report.coverage_threshold else 'FAIL'} "
        f"({report.coverage_fraction:.3f} of seeds, need >= {report.coverage_threshold:.3f})"
    )
    print(
        f"regret bound: "
        f"{'pass' if report.bound_fraction >= report.bound_threshold else 'FAIL'} "
        f"({report.bound_fraction:.3f} of seeds, need >= {report.bound_threshold:.3f})"
    )
    return EXIT_OK if report.passed else EXIT_CHECK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "version":
            print(__version__)
            return EXIT_OK
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericsError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    parser.error(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
