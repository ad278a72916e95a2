"""Illumination schedules and excitation sources.

A schedule is a piecewise-constant phi(t) over half-open step intervals
[start, end); outside all segments phi equals the dark base value. Point
sources impose u = amplitude on a small disc of cells, modelling a local
kick that launches a circular wave.

The stochastic source manager keeps exactly one live source at a time.
When the current source outlives its lifetime it is replaced by a fresh
one with uniformly drawn position, period and lifetime. All draws come
from a seeded PCG64 generator (numpy), so a seed pins the whole source
sequence bit for bit on any platform.
"""

from __future__ import annotations

import bisect
import warnings
from dataclasses import dataclass

import numpy as np

from .kinetics import MarbleState
from .lattice import DomainMask


@dataclass(frozen=True)
class StimulusSchedule:
    base_phi: float = 0.05
    segments: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self) -> None:
        if self.base_phi < 0:
            raise ValueError(f"base_phi must be non-negative, got {self.base_phi}")
        prev_end = None
        for start, end, phi in self.segments:
            if end <= start or start < 0:
                raise ValueError(f"bad segment [{start}, {end})")
            if phi < 0:
                raise ValueError(f"segment phi must be non-negative, got {phi}")
            if prev_end is not None and start < prev_end:
                raise ValueError(f"segments overlap at step {start}")
            prev_end = end


def phi_at(schedule: StimulusSchedule, step: int) -> float:
    """phi of the covering segment, else the base value. Ends exclusive."""
    if step < 0:
        raise ValueError(f"step must be non-negative, got {step}")
    starts = [s for s, _, _ in schedule.segments]
    i = bisect.bisect_right(starts, step) - 1
    if i >= 0:
        start, end, phi = schedule.segments[i]
        if start <= step < end:
            return phi
    return schedule.base_phi


@dataclass(frozen=True)
class ExcitationSource:
    """Point source: imposes u = amplitude on a disc, on a fixed rhythm.

    Fires at steps s with (s - birth_step) % period == 0 while
    s - birth_step < lifetime.
    """

    center: tuple[int, int]  # (x, y)
    period: int
    lifetime: int
    birth_step: int = 0
    radius: int = 3
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if self.period < 1 or self.lifetime < 1:
            raise ValueError("period and lifetime must be >= 1")
        if self.radius < 0 or self.birth_step < 0:
            raise ValueError("radius and birth_step must be >= 0")

    def fires_at(self, step: int) -> bool:
        age = step - self.birth_step
        return 0 <= age < self.lifetime and age % self.period == 0

    def expired_at(self, step: int) -> bool:
        return step - self.birth_step >= self.lifetime


def excite(state: MarbleState, source: ExcitationSource) -> MarbleState:
    """Set u to the source amplitude on active cells within its radius.

    v is untouched. Idempotent (set, not add). A source with no overlap
    with the mask is a warned no-op.
    """
    mask = state.mask
    cx, cy = source.center
    r = source.radius
    x0, x1 = max(0, cx - r), min(mask.width - 1, cx + r)
    y0, y1 = max(0, cy - r), min(mask.height - 1, cy + r)
    touched = 0
    for y in range(y0, y1 + 1):
        for x in range(x0, x1 + 1):
            if (x - cx) ** 2 + (y - cy) ** 2 <= r * r and mask.active[y, x]:
                state.u.values[y, x] = source.amplitude
                touched += 1
    if touched == 0:
        warnings.warn(
            f"excitation at ({cx}, {cy}) radius {r} misses the active domain",
            stacklevel=2,
        )
    return state


# event rows for the firing log: (step, kind, x, y, period, lifetime)
SourceEvent = tuple[int, str, int, int, int, int]


class SourceManager:
    """Keeps exactly one live stochastic source on the disc.

    Replacement draws, in order: position (uniform over active cells at
    least rim_margin cells inside the rim), integer period, integer
    lifetime. Generator: numpy PCG64 seeded from `seed`.
    """

    def __init__(
        self,
        mask: DomainMask,
        seed: int,
        period_range: tuple[int, int] = (100, 700),
        lifetime_range: tuple[int, int] = (1300, 6300),
        rim_margin: int = 5,
        radius: int = 3,
        amplitude: float = 1.0,
    ):
        if period_range[0] < 1 or period_range[0] > period_range[1]:
            raise ValueError(f"bad period range {period_range}")
        if lifetime_range[0] < 1 or lifetime_range[0] > lifetime_range[1]:
            raise ValueError(f"bad lifetime range {lifetime_range}")
        self.mask = mask
        self.period_range = period_range
        self.lifetime_range = lifetime_range
        self.rim_margin = rim_margin
        self.radius = radius
        self.amplitude = amplitude
        self.rng = np.random.Generator(np.random.PCG64(seed))
        self.current: ExcitationSource | None = None
        cx, cy = mask.center
        inner = mask.radius_nodes - rim_margin
        if inner < 0:
            raise ValueError(f"rim margin {rim_margin} exceeds disc radius")
        yy, xx = np.nonzero(
            mask.active
            & ((np.arange(mask.width)[None, :] - cx) ** 2
               + (np.arange(mask.height)[:, None] - cy) ** 2 <= inner * inner)
        )
        if len(xx) == 0:
            raise ValueError("no eligible cells for source placement")
        self._eligible = np.stack([xx, yy], axis=1)  # row-major (x, y) pairs

    def _draw(self, birth_step: int) -> ExcitationSource:
        pos = self._eligible[int(self.rng.integers(0, len(self._eligible)))]
        period = int(self.rng.integers(self.period_range[0], self.period_range[1] + 1))
        lifetime = int(
            self.rng.integers(self.lifetime_range[0], self.lifetime_range[1] + 1)
        )
        return ExcitationSource(
            center=(int(pos[0]), int(pos[1])),
            period=period,
            lifetime=lifetime,
            birth_step=birth_step,
            radius=self.radius,
            amplitude=self.amplitude,
        )


def advance_sources(
    mgr: SourceManager, state: MarbleState, step: int
) -> list[SourceEvent]:
    """Expire/replace the live source and fire it if due. Mutates both args."""
    events: list[SourceEvent] = []
    src = mgr.current
    if src is not None and src.expired_at(step):
        events.append(
            (step, "expire", src.center[0], src.center[1], src.period, src.lifetime)
        )
        src = None
    if src is None:
        src = mgr._draw(step)
        mgr.current = src
        events.append(
            (step, "spawn", src.center[0], src.center[1], src.period, src.lifetime)
        )
    if src.fires_at(step):
        excite(state, src)
        events.append(
            (step, "fire", src.center[0], src.center[1], src.period, src.lifetime)
        )
    return events
