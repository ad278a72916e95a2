"""Virtual electrode pairs and potential-difference recording.

An electrode is a fixed rectangle of cells; the observable is the sum of
the activator over the recording rectangle minus the sum over the
reference one, in concentration units (no volt scale is claimed). A wave
sweeping from the recording toward the reference electrode therefore
shows up as a rise followed by a dip: the biphasic spike.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kinetics import MarbleState
from .lattice import DomainMask
from .stimulation import StimulusSchedule, phi_at


@dataclass(frozen=True)
class ElectrodeProbe:
    rect: tuple[int, int, int, int]  # x0, y0, width, height
    label: str = "recording"  # or "reference"

    def __post_init__(self) -> None:
        x0, y0, w, h = self.rect
        if w < 1 or h < 1:
            raise ValueError(f"electrode rect must be at least 1x1, got {self.rect}")
        if x0 < 0 or y0 < 0:
            raise ValueError(f"electrode rect origin must be non-negative: {self.rect}")

    def active_cell_count(self, mask: DomainMask) -> int:
        x0, y0, w, h = self.rect
        return int(mask.active[y0 : y0 + h, x0 : x0 + w].sum())


def _electrode_sum(values: np.ndarray, mask: DomainMask, probe: ElectrodeProbe) -> float:
    x0, y0, w, h = probe.rect
    sub = values[y0 : y0 + h, x0 : x0 + w]
    subm = mask.active[y0 : y0 + h, x0 : x0 + w]
    if not subm.any():
        raise ValueError(f"electrode {probe.label} {probe.rect} covers no active cells")
    return float(np.sum(sub[subm]))


def measure_potential(
    state: MarbleState, e1: ElectrodeProbe, e2: ElectrodeProbe
) -> float:
    """Sum of u over e2's active cells minus the sum over e1's.

    Each sum is taken over the row-major extraction of the rectangle, so
    swapping the electrodes negates the result exactly.
    """
    s2 = _electrode_sum(state.u.values, state.mask, e2)
    s1 = _electrode_sum(state.u.values, state.mask, e1)
    return s2 - s1


@dataclass
class PotentialTrace:
    """(step, potential, phi) samples on a fixed stride."""

    record_every: int = 10
    samples: list[tuple[int, float, float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")

    @property
    def steps(self) -> np.ndarray:
        return np.array([s for s, _, _ in self.samples], dtype=np.int64)

    @property
    def potentials(self) -> np.ndarray:
        return np.array([p for _, p, _ in self.samples], dtype=np.float64)

    @property
    def phis(self) -> np.ndarray:
        return np.array([f for _, _, f in self.samples], dtype=np.float64)


def record(
    trace: PotentialTrace,
    state: MarbleState,
    e1: ElectrodeProbe,
    e2: ElectrodeProbe,
    schedule: StimulusSchedule,
) -> PotentialTrace:
    """Append a sample if the state's step is on the trace's stride.

    Off-stride steps are skipped silently; step 0 is always on stride.
    """
    step = state.step_index
    if step % trace.record_every != 0:
        return trace
    trace.samples.append((step, measure_potential(state, e1, e2), phi_at(schedule, step)))
    return trace


def write_trace_csv(trace: PotentialTrace, path, dt_per_step: float) -> None:
    """CSV with header step,time,potential,phi at full round-trip precision."""
    with open(path, "w", newline="") as fh:
        fh.write("step,time,potential,phi\n")
        for step, pot, phi in trace.samples:
            t = step * dt_per_step
            fh.write(f"{step},{t!r},{pot!r},{phi!r}\n")


def read_trace_csv(path) -> tuple[PotentialTrace, float]:
    """Read a trace CSV back; returns (trace, dt_per_step).

    dt is recovered from the first row with step > 0 (1.0 for traces that
    never leave step 0). record_every is inferred from the step stride.
    """
    samples: list[tuple[int, float, float]] = []
    dt: float | None = None
    with open(path, "r", newline="") as fh:
        header = fh.readline().strip()
        if header != "step,time,potential,phi":
            raise ValueError(f"unexpected trace header: {header!r}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            step_s, time_s, pot_s, phi_s = line.split(",")
            step = int(step_s)
            if step > 0 and dt is None:
                dt = float(time_s) / step
            samples.append((step, float(pot_s), float(phi_s)))
    stride = samples[1][0] - samples[0][0] if len(samples) > 1 else 1
    trace = PotentialTrace(record_every=max(1, stride))
    trace.samples = samples
    return trace, 1.0 if dt is None else dt
