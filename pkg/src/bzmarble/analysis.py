"""Spike detection and oscillation statistics on potential traces.

Detection is a hysteresis (Schmitt trigger) scheme: an excursion opens
when the trace reaches the high threshold and closes when it falls back
to the low one; the spike lands on the maximum inside the excursion. An
excursion still open at the end of the trace yields no spike.

Waves crossing the electrode pair in the opposite direction produce
downward deflections, so the same detector is also run on the negated
trace and the two spike sets are merged chronologically before period
statistics are computed.

Thresholds default to fractions of the span above the trace median
(baselines drift, so absolute levels would not travel across runs).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .probes import PotentialTrace
from .stimulation import StimulusSchedule

LOW_FREQUENCY_PERIOD = 240.0  # classification boundary, in time units

# default hysteresis levels, as fractions of (max - median) above the median
DEFAULT_HI_FRACTION = 0.3
DEFAULT_LO_FRACTION = 0.1


class ClassificationError(ValueError):
    """Stimulus-response classification is impossible on this trace."""


@dataclass(frozen=True)
class SpikeTrain:
    spike_steps: tuple[int, ...]
    threshold_hi: float
    threshold_lo: float

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.spike_steps, self.spike_steps[1:])):
            raise ValueError("spike steps must be strictly increasing")


@dataclass(frozen=True)
class SpikeStats:
    n_spikes: int
    mean_period: float | None
    sigma: float | None
    classification: str | None  # "low_frequency" | "typical" | None


@dataclass(frozen=True)
class StimulusResponse:
    halted: bool
    latency_on: float
    latency_off: float | None
    group: str  # "A" | "B" | "none"


def _detect_on_arrays(
    steps: np.ndarray, values: np.ndarray, hi: float, lo: float
) -> list[int]:
    """Hysteresis scan over sample arrays; returns peak step indices.

    Convention: an excursion opens at a sample >= hi while armed and
    closes at the first later sample <= lo. Peaks take the earliest
    maximum. The detector starts armed, so a trace that begins at or
    above hi opens immediately.
    """
    if hi <= lo:
        raise ValueError(f"need hi > lo, got hi={hi}, lo={lo}")
    if len(values) == 0:
        raise ValueError("empty trace")
    # walk only the samples that can change the trigger state
    candidates = np.flatnonzero((values >= hi) | (values <= lo))
    spikes: list[int] = []
    armed = True
    open_idx = -1
    for k in candidates:
        val = values[k]
        if armed:
            if val >= hi:
                armed = False
                open_idx = k
        else:
            if val <= lo:
                seg = values[open_idx : k + 1]
                peak = open_idx + int(np.argmax(seg))
                spikes.append(int(steps[peak]))
                armed = True
    return spikes


def detect_spikes(trace: PotentialTrace, hi: float, lo: float) -> SpikeTrain:
    """Positive-going spikes of the trace under the (hi, lo) hysteresis."""
    steps = trace.steps
    values = trace.potentials
    return SpikeTrain(
        spike_steps=tuple(_detect_on_arrays(steps, values, hi, lo)),
        threshold_hi=hi,
        threshold_lo=lo,
    )


def default_thresholds(values: np.ndarray) -> tuple[float, float]:
    """Median-relative hysteresis levels for one polarity of a trace."""
    baseline = float(np.median(values))
    top = float(np.max(values))
    hi = baseline + DEFAULT_HI_FRACTION * (top - baseline)
    lo = baseline + DEFAULT_LO_FRACTION * (top - baseline)
    return hi, lo


def merged_spike_steps(
    trace: PotentialTrace, hi: float | None = None, lo: float | None = None
) -> tuple[int, ...]:
    """Spike steps of both polarities, chronologically merged.

    Explicit thresholds apply symmetrically (the negated trace is scanned
    with the same hi/lo). With defaults, each polarity gets levels from
    its own median and maximum; a polarity whose levels degenerate
    (hi <= lo, e.g. a flat trace) contributes no spikes.
    """
    steps = trace.steps
    values = trace.potentials
    out: list[int] = []
    for polarity in (values, -values):
        if hi is None or lo is None:
            h, l = default_thresholds(polarity)
        else:
            h, l = hi, lo
        if h <= l:
            continue
        out.extend(_detect_on_arrays(steps, polarity, h, l))
    return tuple(sorted(out))


def period_stats(
    train: SpikeTrain | Sequence[int], dt_per_step: float
) -> SpikeStats:
    """Mean and population sigma of consecutive-spike periods, in time units.

    Fewer than two spikes leave mean, sigma and classification absent.
    The mean is taken from the endpoints (the gap sum telescopes), so
    mean * (n - 1) reproduces the spike-train span.
    """
    steps = train.spike_steps if isinstance(train, SpikeTrain) else tuple(train)
    n = len(steps)
    if n < 2:
        return SpikeStats(n_spikes=n, mean_period=None, sigma=None, classification=None)
    gaps = np.diff(np.asarray(steps, dtype=np.float64)) * dt_per_step
    mean = (steps[-1] - steps[0]) * dt_per_step / (n - 1)
    sigma = float(np.sqrt(np.mean((gaps - np.mean(gaps)) ** 2)))
    cls = "low_frequency" if mean > LOW_FREQUENCY_PERIOD else "typical"
    return SpikeStats(n_spikes=n, mean_period=float(mean), sigma=sigma, classification=cls)


def _first_lit_segment(schedule: StimulusSchedule) -> tuple[int, int, float]:
    for start, end, phi in schedule.segments:
        if phi > schedule.base_phi:
            return start, end, phi
    raise ClassificationError("schedule has no lit segment")


def classify_response(
    trace: PotentialTrace,
    schedule: StimulusSchedule,
    dt_per_step: float,
    hi: float | None = None,
    lo: float | None = None,
) -> StimulusResponse:
    """Split the trace around the first lit window and compare regimes.

    halted: no spike inside the lit window once a grace period of one
    pre-stimulus mean period has passed (waves already in flight at
    light-on may still land on the electrodes early in the window).
    latency_on: last lit-window spike relative to light-on (0 if none).
    latency_off: first post-window spike relative to light-off (absent
    if spiking never resumes).
    group: A if the post mean period lengthened against the pre mean,
    B if it shortened, none if equal or not measurable.
    """
    lit_start, lit_end, _ = _first_lit_segment(schedule)
    spikes = merged_spike_steps(trace, hi, lo)
    pre = [s for s in spikes if s < lit_start]
    lit = [s for s in spikes if lit_start <= s < lit_end]
    post = [s for s in spikes if s >= lit_end]
    if len(pre) < 2:
        raise ClassificationError(
            f"need >= 2 pre-stimulus spikes to classify, found {len(pre)}"
        )
    pre_stats = period_stats(pre, dt_per_step)
    grace_steps = pre_stats.mean_period / dt_per_step
    halted = not any(s >= lit_start + grace_steps for s in lit)
    latency_on = (lit[-1] - lit_start) * dt_per_step if lit else 0.0
    latency_off = (post[0] - lit_end) * dt_per_step if post else None
    post_stats = period_stats(post, dt_per_step)
    if post_stats.mean_period is None:
        group = "none"
    elif post_stats.mean_period > pre_stats.mean_period:
        group = "A"
    elif post_stats.mean_period < pre_stats.mean_period:
        group = "B"
    else:
        group = "none"
    return StimulusResponse(
        halted=halted, latency_on=latency_on, latency_off=latency_off, group=group
    )


def lit_schedule_from_trace(trace: PotentialTrace) -> StimulusSchedule | None:
    """Reconstruct the illumination windows from a trace's phi column.

    The first sample's phi is taken as the dark base; maximal runs of
    samples with a higher phi become segments (boundaries land on the
    sampling grid). Returns None if the trace never leaves the base.
    """
    steps = trace.steps
    phis = trace.phis
    base = float(phis[0])
    segments: list[tuple[int, int, float]] = []
    open_start: int | None = None
    open_phi = base
    for step, phi in zip(steps, phis):
        lit = phi > base
        if lit and open_start is None:
            open_start, open_phi = int(step), float(phi)
        elif not lit and open_start is not None:
            segments.append((open_start, int(step), open_phi))
            open_start = None
    if open_start is not None:
        segments.append((open_start, int(steps[-1]) + trace.record_every, open_phi))
    if not segments:
        return None
    return StimulusSchedule(base_phi=base, segments=tuple(segments))


def stats_csv(stats: SpikeStats) -> str:
    """Two-line CSV: header and one row; absent values are empty fields."""
    mean = "" if stats.mean_period is None else repr(stats.mean_period)
    sigma = "" if stats.sigma is None else repr(stats.sigma)
    cls = "" if stats.classification is None else stats.classification
    return f"n_spikes,mean_period,sigma,classification\n{stats.n_spikes},{mean},{sigma},{cls}\n"


def response_report(resp: StimulusResponse) -> str:
    """Plain-text report with a fixed key order."""
    lines = [
        "{",
        f'  "halted": {"true" if resp.halted else "false"},',
        f'  "latency_on": {resp.latency_on!r},',
        f'  "latency_off": {"null" if resp.latency_off is None else repr(resp.latency_off)},',
        f'  "group": "{resp.group}"',
        "}",
    ]
    return "\n".join(lines) + "\n"
