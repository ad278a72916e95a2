"""Scenario configs, the simulation loop, and the phi threshold scan.

Configs are flat ``key = value`` text with dotted section prefixes and
``#`` comments. Unknown keys are rejected; every run echoes its effective
config (defaults filled in) next to the outputs, and feeding the echo
back reproduces the run byte for byte.

A run starts from the homogeneous rest state at the dark phi, then per
step: look up phi, advance/fire sources, advance the fields, record and
snapshot on their strides.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, replace

import numpy as np

from .kinetics import (
    MarbleState,
    SimParams,
    euler_step,
    find_homogeneous_fixed_point,
    homogeneous_state,
)
from .lattice import DomainMask, build_disc, write_pgm
from .probes import ElectrodeProbe, PotentialTrace, record, write_trace_csv
from .stimulation import (
    ExcitationSource,
    SourceManager,
    StimulusSchedule,
    advance_sources,
    excite,
    phi_at,
)


class ConfigError(ValueError):
    """Config text could not be parsed or validated."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        prefix = f"line {line_no}: " if line_no is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class ManagerRanges:
    """Stochastic source-churn settings (see stimulation.SourceManager)."""

    period_range: tuple[int, int] = (100, 700)
    lifetime_range: tuple[int, int] = (1300, 6300)
    rim_margin: int = 5
    radius: int = 3
    amplitude: float = 1.0


def default_electrodes(radius: int) -> tuple[ElectrodeProbe, ElectrodeProbe]:
    """Two 6x20 rectangles near the disc top, 14 cells apart.

    e1 (reference) sits left of centre, e2 (recording) right; sized for
    the default disc, so small domains need explicit rects.
    """
    n = 2 * radius + 1
    cx = radius
    y0 = n // 18
    e1 = ElectrodeProbe(rect=(cx - 13, y0, 6, 20), label="reference")
    e2 = ElectrodeProbe(rect=(cx + 7, y0, 6, 20), label="recording")
    return e1, e2


@dataclass(frozen=True)
class ScenarioConfig:
    radius: int
    total_steps: int
    seed: int
    params: SimParams = SimParams()
    schedule: StimulusSchedule = StimulusSchedule()
    electrode1: ElectrodeProbe | None = None  # None: derived from radius
    electrode2: ElectrodeProbe | None = None
    sources: tuple[ExcitationSource, ...] = ()
    manager: ManagerRanges | None = None
    record_every: int = 10
    snapshot_every: int = 500
    output_dir: str = "out"
    parallel: bool = False

    def __post_init__(self) -> None:
        if self.radius < 2:
            raise ValueError(f"domain radius must be >= 2, got {self.radius}")
        if self.total_steps < 1:
            raise ValueError(f"total_steps must be >= 1, got {self.total_steps}")
        if self.record_every < 1:
            raise ValueError(f"record_every must be >= 1, got {self.record_every}")
        if self.snapshot_every < 0:
            raise ValueError(f"snapshot_every must be >= 0, got {self.snapshot_every}")
        if self.sources and self.manager is not None:
            raise ValueError("give scripted sources or manager ranges, not both")

    def electrodes(self) -> tuple[ElectrodeProbe, ElectrodeProbe]:
        if self.electrode1 is not None and self.electrode2 is not None:
            return self.electrode1, self.electrode2
        d1, d2 = default_electrodes(self.radius)
        return self.electrode1 or d1, self.electrode2 or d2


@dataclass(frozen=True)
class RunArtifacts:
    output_dir: str
    config_path: str
    trace_path: str
    firing_log_path: str
    snapshot_paths: tuple[str, ...]


_INT_KEYS = {
    "domain.radius": "radius",
    "run.total_steps": "total_steps",
    "run.seed": "seed",
    "run.record_every": "record_every",
    "run.snapshot_every": "snapshot_every",
}
_PARAM_KEYS = {"eps", "f", "q", "d_u", "dt", "dx"}
_SOURCE_KEYS = {"center", "period", "lifetime", "birth_step", "radius", "amplitude"}
_MANAGER_KEYS = {"period_range", "lifetime_range", "rim_margin", "radius", "amplitude"}


def _tokens(value: str, n: int, line: int, key: str) -> list[str]:
    parts = value.split()
    if len(parts) != n:
        raise ConfigError(f"{key} expects {n} values, got {len(parts)}", line)
    return parts


def _to_int(value: str, line: int, key: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key} expects an integer, got {value!r}", line) from None


def _to_float(value: str, line: int, key: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key} expects a number, got {value!r}", line) from None


def parse_config(text: str) -> ScenarioConfig:
    """Parse config text into a validated ScenarioConfig."""
    entries: dict[str, tuple[str, int]] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line_no)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"empty key or value in {raw.strip()!r}", line_no)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r}", line_no)
        entries[key] = (value, line_no)

    def take(key: str) -> tuple[str, int] | None:
        return entries.pop(key, None)

    fields: dict = {}
    for key, name in _INT_KEYS.items():
        got = take(key)
        if got is not None:
            fields[name] = _to_int(got[0], got[1], key)
    for name in ("radius", "total_steps", "seed"):
        if name not in fields:
            raise ConfigError(f"missing required key for {name}")

    params_kwargs = {}
    for pname in _PARAM_KEYS:
        got = take(f"params.{pname}")
        if got is not None:
            params_kwargs[pname] = _to_float(got[0], got[1], f"params.{pname}")
    base_line = None
    got = take("schedule.base_phi")
    if got is not None:
        base_line = got[1]
        params_kwargs["phi"] = _to_float(got[0], base_line, "schedule.base_phi")
    try:
        params = SimParams(**params_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc), base_line) from None

    segments = []
    for key in sorted(
        (k for k in entries if re.fullmatch(r"schedule\.segment\d+", k)),
        key=lambda k: int(k.rsplit("segment", 1)[1]),
    ):
        value, line = take(key)
        s, e, p = _tokens(value, 3, line, key)
        segments.append((_to_int(s, line, key), _to_int(e, line, key), _to_float(p, line, key)))
    try:
        schedule = StimulusSchedule(base_phi=params.phi, segments=tuple(segments))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    electrodes: list[ElectrodeProbe | None] = [None, None]
    for idx, label in ((1, "reference"), (2, "recording")):
        got = take(f"electrode{idx}.rect")
        if got is not None:
            value, line = got
            x0, y0, w, h = (_to_int(t, line, "rect") for t in _tokens(value, 4, line, f"electrode{idx}.rect"))
            try:
                electrodes[idx - 1] = ElectrodeProbe(rect=(x0, y0, w, h), label=label)
            except ValueError as exc:
                raise ConfigError(str(exc), line) from None

    source_ids = sorted(
        {
            int(m.group(1))
            for k in entries
            if (m := re.fullmatch(r"source(\d+)\.(\w+)", k)) and m.group(2) in _SOURCE_KEYS
        }
    )
    sources = []
    for sid in source_ids:
        kwargs: dict = {}
        line = None
        for sname in _SOURCE_KEYS:
            got = take(f"source{sid}.{sname}")
            if got is None:
                continue
            value, line = got
            key = f"source{sid}.{sname}"
            if sname == "center":
                x, y = _tokens(value, 2, line, key)
                kwargs["center"] = (_to_int(x, line, key), _to_int(y, line, key))
            elif sname == "amplitude":
                kwargs[sname] = _to_float(value, line, key)
            else:
                kwargs[sname] = _to_int(value, line, key)
        for required in ("center", "period", "lifetime"):
            if required not in kwargs:
                raise ConfigError(f"source{sid} is missing {required}", line)
        try:
            sources.append(ExcitationSource(**kwargs))
        except ValueError as exc:
            raise ConfigError(str(exc), line) from None

    manager = None
    manager_kwargs: dict = {}
    for mname in _MANAGER_KEYS:
        got = take(f"manager.{mname}")
        if got is None:
            continue
        value, line = got
        key = f"manager.{mname}"
        if mname.endswith("_range"):
            a, b = _tokens(value, 2, line, key)
            manager_kwargs[mname] = (_to_int(a, line, key), _to_int(b, line, key))
        elif mname == "amplitude":
            manager_kwargs[mname] = _to_float(value, line, key)
        else:
            manager_kwargs[mname] = _to_int(value, line, key)
    if manager_kwargs:
        manager = ManagerRanges(**manager_kwargs)

    str_keys = {"run.output_dir": "output_dir"}
    for key, name in str_keys.items():
        got = take(key)
        if got is not None:
            fields[name] = got[0]
    got = take("run.parallel")
    if got is not None:
        value, line = got
        if value not in ("true", "false"):
            raise ConfigError(f"run.parallel expects true or false, got {value!r}", line)
        fields["parallel"] = value == "true"

    if entries:
        key, (_, line) = next(iter(entries.items()))
        raise ConfigError(f"unknown key {key!r}", line)

    if electrodes[0] is None or electrodes[1] is None:
        try:
            d1, d2 = default_electrodes(fields["radius"])
        except ValueError as exc:
            raise ConfigError(
                f"default electrodes do not fit radius {fields['radius']}; "
                f"give electrode rects explicitly ({exc})"
            ) from None
        electrodes[0] = electrodes[0] or d1
        electrodes[1] = electrodes[1] or d2

    try:
        return ScenarioConfig(
            params=params,
            schedule=schedule,
            electrode1=electrodes[0],
            electrode2=electrodes[1],
            sources=tuple(sources),
            manager=manager,
            **fields,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def echo_config(cfg: ScenarioConfig) -> str:
    """Effective config text: every default made explicit, fixed key order."""
    p = cfg.params
    e1, e2 = cfg.electrodes()
    lines = [
        "# effective configuration (all defaults filled in)",
        f"domain.radius = {cfg.radius}",
        f"params.eps = {p.eps!r}",
        f"params.f = {p.f!r}",
        f"params.q = {p.q!r}",
        f"params.d_u = {p.d_u!r}",
        f"params.dt = {p.dt!r}",
        f"params.dx = {p.dx!r}",
        f"schedule.base_phi = {cfg.schedule.base_phi!r}",
    ]
    for i, (s, e, phi) in enumerate(cfg.schedule.segments, start=1):
        lines.append(f"schedule.segment{i} = {s} {e} {phi!r}")
    for idx, probe in ((1, e1), (2, e2)):
        x0, y0, w, h = probe.rect
        lines.append(f"electrode{idx}.rect = {x0} {y0} {w} {h}")
    for i, src in enumerate(cfg.sources, start=1):
        lines.append(f"source{i}.center = {src.center[0]} {src.center[1]}")
        lines.append(f"source{i}.period = {src.period}")
        lines.append(f"source{i}.lifetime = {src.lifetime}")
        lines.append(f"source{i}.birth_step = {src.birth_step}")
        lines.append(f"source{i}.radius = {src.radius}")
        lines.append(f"source{i}.amplitude = {src.amplitude!r}")
    if cfg.manager is not None:
        m = cfg.manager
        lines.append(f"manager.period_range = {m.period_range[0]} {m.period_range[1]}")
        lines.append(f"manager.lifetime_range = {m.lifetime_range[0]} {m.lifetime_range[1]}")
        lines.append(f"manager.rim_margin = {m.rim_margin}")
        lines.append(f"manager.radius = {m.radius}")
        lines.append(f"manager.amplitude = {m.amplitude!r}")
    lines.append(f"run.total_steps = {cfg.total_steps}")
    lines.append(f"run.record_every = {cfg.record_every}")
    lines.append(f"run.snapshot_every = {cfg.snapshot_every}")
    lines.append(f"run.seed = {cfg.seed}")
    lines.append(f"run.output_dir = {cfg.output_dir}")
    lines.append(f"run.parallel = {'true' if cfg.parallel else 'false'}")
    return "\n".join(lines) + "\n"


def _write_firing_log(path: str, events: list[tuple[int, str, int, int, int, int]]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("step,event,x,y,period,lifetime\n")
        for step, kind, x, y, period, lifetime in events:
            fh.write(f"{step},{kind},{x},{y},{period},{lifetime}\n")


def run_scenario(
    cfg: ScenarioConfig,
    out_dir: str | None = None,
    seed: int | None = None,
    parallel: bool | None = None,
) -> RunArtifacts:
    """Execute one scenario; write trace, firing log, snapshots, config echo."""
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if out_dir is not None:
        cfg = replace(cfg, output_dir=out_dir)
    if parallel is not None:
        cfg = replace(cfg, parallel=parallel)

    mask = build_disc(cfg.radius)
    e1, e2 = cfg.electrodes()
    for probe in (e1, e2):
        x0, y0, w, h = probe.rect
        if x0 + w > mask.width or y0 + h > mask.height:
            raise ConfigError(f"electrode {probe.label} {probe.rect} leaves the domain")
        if probe.active_cell_count(mask) == 0:
            raise ConfigError(f"electrode {probe.label} {probe.rect} misses the disc")

    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    snap_dir = os.path.join(out, "snapshots")
    if cfg.snapshot_every > 0:
        os.makedirs(snap_dir, exist_ok=True)
    config_path = os.path.join(out, "effective_config.cfg")
    with open(config_path, "w") as fh:
        fh.write(echo_config(cfg))

    rest = find_homogeneous_fixed_point(cfg.params, cfg.schedule.base_phi)
    state = homogeneous_state(mask, rest, rest)
    manager = (
        SourceManager(
            mask,
            cfg.seed,
            period_range=cfg.manager.period_range,
            lifetime_range=cfg.manager.lifetime_range,
            rim_margin=cfg.manager.rim_margin,
            radius=cfg.manager.radius,
            amplitude=cfg.manager.amplitude,
        )
        if cfg.manager is not None
        else None
    )

    trace = PotentialTrace(record_every=cfg.record_every)
    record(trace, state, e1, e2, cfg.schedule)
    events: list[tuple[int, str, int, int, int, int]] = []
    snapshot_paths: list[str] = []

    def snapshot(st: MarbleState) -> None:
        path = os.path.join(snap_dir, f"{st.step_index:09d}.pgm")
        write_pgm(st.u, path)
        snapshot_paths.append(path)

    if cfg.snapshot_every > 0:
        snapshot(state)
    for s in range(cfg.total_steps):
        phi = phi_at(cfg.schedule, s)
        if manager is not None:
            events.extend(advance_sources(manager, state, s))
        else:
            for src in cfg.sources:
                if s == src.birth_step:
                    events.append((s, "spawn", *src.center, src.period, src.lifetime))
                if src.fires_at(s):
                    excite(state, src)
                    events.append((s, "fire", *src.center, src.period, src.lifetime))
                if s - src.birth_step == src.lifetime:
                    events.append((s, "expire", *src.center, src.period, src.lifetime))
        state = euler_step(state, cfg.params, phi, parallel=cfg.parallel)
        if state.step_index % cfg.record_every == 0:
            record(trace, state, e1, e2, cfg.schedule)
        if cfg.snapshot_every > 0 and state.step_index % cfg.snapshot_every == 0:
            snapshot(state)

    trace_path = os.path.join(out, "trace.csv")
    write_trace_csv(trace, trace_path, cfg.params.dt)
    firing_log_path = os.path.join(out, "firing_log.csv")
    _write_firing_log(firing_log_path, events)
    return RunArtifacts(
        output_dir=out,
        config_path=config_path,
        trace_path=trace_path,
        firing_log_path=firing_log_path,
        snapshot_paths=tuple(snapshot_paths),
    )


@dataclass(frozen=True)
class ScanResult:
    phi_c: float
    outcomes: tuple[tuple[float, bool], ...]  # (phi, propagated), in test order

    def __float__(self) -> float:
        return self.phi_c


def propagation_test(
    mask: DomainMask,
    params: SimParams,
    phi: float,
    distance: float = 50.0,
    step_budget: int = 20000,
    stim_radius: int = 3,
    amplitude: float = 1.0,
    check_every: int = 10,
    parallel: bool = False,
) -> bool:
    """Does a centre kick reach `distance` cells at this phi?

    Start at rest for the given phi, impose u = amplitude on a small
    centre disc, and watch whether any cell at least `distance` cells out
    rises above u* + 0.3 within the step budget.
    """
    us = find_homogeneous_fixed_point(params, phi)
    state = homogeneous_state(mask, us, us)
    cx, cy = mask.center
    excite(
        state,
        ExcitationSource(
            center=(cx, cy), period=1, lifetime=1, radius=stim_radius, amplitude=amplitude
        ),
    )
    yy, xx = np.mgrid[0 : mask.height, 0 : mask.width]
    ring = mask.active & ((xx - cx) ** 2 + (yy - cy) ** 2 >= distance * distance)
    if not ring.any():
        raise ValueError(f"no active cells at distance >= {distance}")
    threshold = us + 0.3
    for s in range(step_budget):
        state = euler_step(state, params, phi, parallel=parallel)
        if (s + 1) % check_every == 0 or s + 1 == step_budget:
            peak = np.max(state.u.values, initial=-np.inf, where=ring)
            if peak > threshold:
                return True
    return False


def scan_phi(
    cfg: ScenarioConfig,
    phi_lo: float,
    phi_hi: float,
    tol: float,
    distance: float = 50.0,
    step_budget: int = 20000,
) -> ScanResult:
    """Bisect for the photoinhibition threshold phi_c in [phi_lo, phi_hi].

    The bracket is verified first: waves must propagate at phi_lo and die
    at phi_hi. Bisection narrows the bracket to `tol` and returns its
    midpoint together with every (phi, propagated) outcome tested.
    """
    if not (phi_lo < phi_hi):
        raise ValueError(f"invalid bracket: need phi_lo < phi_hi, got [{phi_lo}, {phi_hi}]")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    mask = build_disc(cfg.radius)
    outcomes: list[tuple[float, bool]] = []

    def propagates(phi: float) -> bool:
        ok = propagation_test(
            mask,
            cfg.params,
            phi,
            distance=distance,
            step_budget=step_budget,
            parallel=cfg.parallel,
        )
        outcomes.append((phi, ok))
        return ok

    if not propagates(phi_lo):
        raise ValueError(f"invalid bracket: no propagation at phi_lo = {phi_lo}")
    if propagates(phi_hi):
        raise ValueError(f"invalid bracket: propagation still succeeds at phi_hi = {phi_hi}")
    lo, hi = phi_lo, phi_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if propagates(mid):
            lo = mid
        else:
            hi = mid
    return ScanResult(phi_c=0.5 * (lo + hi), outcomes=tuple(outcomes))
