#!/usr/bin/env python3
"""Parameter scan behind the frozen constants in tests/ and configs/.

Run from the repository root:

    python3 scripts/calibrate.py [--fast]

Measures, on the default 185-node disc at default parameters:
  * rest-state levels u*(phi) for the working phi values,
  * wave arrival times at several radii (propagation speed),
  * the photoinhibition threshold phi_c (bisection, tol 0.002),
  * peak-to-peak potential amplitude for the 3 o'clock vs 5 o'clock
    source placements (the angle-dependence ratio).

The printed values are frozen as regression constants; rerun this script
after touching the kinetics or the stencil.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from bzmarble import (
    ExcitationSource,
    ScenarioConfig,
    SimParams,
    build_disc,
    excite,
    euler_step,
    find_homogeneous_fixed_point,
    homogeneous_state,
    measure_potential,
    scan_phi,
)
from bzmarble.scenario import default_electrodes


def wave_arrivals(radius: int, phi: float, budget: int) -> dict[int, int]:
    p = SimParams()
    mask = build_disc(radius)
    cx, cy = mask.center
    us = find_homogeneous_fixed_point(p, phi)
    state = homogeneous_state(mask, us, us)
    excite(state, ExcitationSource(center=(cx, cy), period=1, lifetime=1, radius=3))
    yy, xx = np.mgrid[0 : mask.height, 0 : mask.width]
    r2 = (xx - cx) ** 2 + (yy - cy) ** 2
    thresh = us + 0.3
    arrivals: dict[int, int] = {}
    targets = [20, 50, 100, 150]
    for s in range(1, budget + 1):
        state = euler_step(state, p, phi)
        if s % 50 == 0:
            above = state.u.values > thresh
            if above.any():
                rmax = float(np.sqrt(r2[above].max()))
                for d in targets:
                    if d not in arrivals and rmax >= d:
                        arrivals[d] = s
            if len(arrivals) == len(targets):
                break
    return arrivals


def source_amplitude(radius: int, center: tuple[int, int], period: int, steps: int) -> float:
    """Peak-to-peak electrode potential for one periodic source placement."""
    p = SimParams()
    mask = build_disc(radius)
    e1, e2 = default_electrodes(radius)
    us = find_homogeneous_fixed_point(p, 0.05)
    state = homogeneous_state(mask, us, us)
    src = ExcitationSource(center=center, period=period, lifetime=steps, birth_step=0)
    lo = hi = 0.0
    for s in range(steps):
        if src.fires_at(s):
            excite(state, src)
        state = euler_step(state, p, 0.05)
        if state.step_index % 10 == 0:
            pot = measure_potential(state, e1, e2)
            lo, hi = min(lo, pot), max(hi, pot)
    return hi - lo


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--fast", action="store_true", help="smaller domain, coarse scan")
    args = parser.parse_args()
    radius = 90 if args.fast else 185
    budget = 10000 if args.fast else 20000

    print("== rest states ==")
    p = SimParams()
    for phi in (0.05, 0.08, 0.09, 0.10, 0.20):
        print(f"u*({phi}) = {find_homogeneous_fixed_point(p, phi)!r}")

    print("== wave arrivals (center kick, phi=0.05) ==")
    t0 = time.perf_counter()
    arr = wave_arrivals(radius, 0.05, budget)
    for d, s in arr.items():
        print(f"distance {d}: step {s}  ({d / s:.5f} cells/step)")
    print(f"({time.perf_counter() - t0:.0f}s)")

    print("== phi_c bisection [0.05, 0.20], tol 0.002 ==")
    cfg = ScenarioConfig(radius=radius, total_steps=1, seed=0)
    t0 = time.perf_counter()
    result = scan_phi(cfg, 0.05, 0.20, 0.002, step_budget=budget)
    for phi, ok in result.outcomes:
        print(f"  phi={phi!r}: {'propagates' if ok else 'blocked'}")
    print(f"phi_c = {result.phi_c!r}  ({time.perf_counter() - t0:.0f}s)")

    print("== angle dependence (3 o'clock vs 5 o'clock source) ==")
    cx = radius
    reach = int(round(radius * 0.757))  # 140 cells on the default disc
    c3 = (cx + reach, cx)
    c5 = (cx + int(round(0.5 * reach)), cx + int(round(0.8660254 * reach)))
    steps = 40000 if not args.fast else 20000
    t0 = time.perf_counter()
    a3 = source_amplitude(radius, c3, 8000, steps)
    a5 = source_amplitude(radius, c5, 8000, steps)
    print(f"3 o'clock {c3}: p2p = {a3!r}")
    print(f"5 o'clock {c5}: p2p = {a5!r}")
    print(f"ratio = {a3 / a5!r}  ({time.perf_counter() - t0:.0f}s)")


if __name__ == "__main__":
    main()
