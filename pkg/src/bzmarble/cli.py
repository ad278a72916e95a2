"""Command line entry point: run scenarios, scan phi, analyze traces.

Exit codes: 0 success, 1 config/usage problem, 2 integration blow-up.
"""

from __future__ import annotations

import argparse
import sys

from .analysis import (
    ClassificationError,
    classify_response,
    lit_schedule_from_trace,
    merged_spike_steps,
    period_stats,
    response_report,
    stats_csv,
)
from .kinetics import BlowUpError
from .probes import read_trace_csv
from .scenario import ConfigError, parse_config, run_scenario, scan_phi


def _load_config(path: str):
    with open(path, "r") as fh:
        return parse_config(fh.read())


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    artifacts = run_scenario(
        cfg, out_dir=args.out_dir, seed=args.seed, parallel=args.parallel or None
    )
    print(f"trace: {artifacts.trace_path}")
    print(f"firing log: {artifacts.firing_log_path}")
    print(f"config echo: {artifacts.config_path}")
    print(f"snapshots: {len(artifacts.snapshot_paths)}")
    return 0


def _cmd_scan_phi(args) -> int:
    cfg = _load_config(args.config)
    result = scan_phi(cfg, args.lo, args.hi, args.tol)
    for phi, ok in result.outcomes:
        print(f"phi = {phi!r}: {'propagates' if ok else 'blocked'}")
    print(f"phi_c = {result.phi_c!r}")
    return 0


def _cmd_analyze(args) -> int:
    trace, dt = read_trace_csv(args.trace)
    spikes = merged_spike_steps(trace, args.hi, args.lo)
    stats = period_stats(spikes, dt)
    sys.stdout.write(stats_csv(stats))
    schedule = lit_schedule_from_trace(trace)
    if schedule is not None:
        response = classify_response(trace, schedule, dt, args.hi, args.lo)
        sys.stdout.write("\n")
        sys.stdout.write(response_report(response))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bzmarble",
        description="Simulated light-sensitive BZ liquid-marble photosensor",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out-dir", default=None)
    p_run.add_argument("--parallel", action="store_true")
    p_run.set_defaults(func=_cmd_run)

    p_scan = sub.add_parser("scan-phi", help="bisect the propagation-failure phi")
    p_scan.add_argument("config")
    p_scan.add_argument("--lo", type=float, required=True)
    p_scan.add_argument("--hi", type=float, required=True)
    p_scan.add_argument("--tol", type=float, required=True)
    p_scan.set_defaults(func=_cmd_scan_phi)

    p_an = sub.add_parser("analyze", help="spike statistics for a trace CSV")
    p_an.add_argument("trace")
    p_an.add_argument("--hi", type=float, default=None)
    p_an.add_argument("--lo", type=float, default=None)
    p_an.set_defaults(func=_cmd_analyze)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ClassificationError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BlowUpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
