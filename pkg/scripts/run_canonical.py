#!/usr/bin/env python3
"""Run every shipped scenario config and print a one-line summary each.

    python3 scripts/run_canonical.py [--out-dir DIR] [--parallel]

Outputs land under DIR (default: out/), one subdirectory per scenario,
containing the trace CSV, firing log, snapshots and the effective-config
echo. The photo scenario integrates 4.1e5 steps and dominates the
runtime (a few minutes).
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

from bzmarble import merged_spike_steps, parse_config, period_stats, read_trace_csv, run_scenario

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
NAMES = ["fig3", "fig4_3oclock", "fig4_5oclock", "fig5", "photo"]


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out-dir", default="out")
    parser.add_argument("--parallel", action="store_true")
    args = parser.parse_args()

    for name in NAMES:
        cfg = parse_config((CONFIG_DIR / f"{name}.cfg").read_text())
        t0 = time.perf_counter()
        art = run_scenario(
            cfg,
            out_dir=str(Path(args.out_dir) / name),
            parallel=args.parallel or None,
        )
        elapsed = time.perf_counter() - t0
        trace, dt = read_trace_csv(art.trace_path)
        spikes = merged_spike_steps(trace)
        stats = period_stats(spikes, dt)
        mean = "n/a" if stats.mean_period is None else f"{stats.mean_period:.2f}"
        print(
            f"{name}: {cfg.total_steps} steps in {elapsed:.0f}s, "
            f"{stats.n_spikes} spikes, mean period {mean} "
            f"({stats.classification or 'unclassified'}) -> {art.output_dir}"
        )


if __name__ == "__main__":
    main()
