import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bzmarble import (
    ClassificationError,
    PotentialTrace,
    StimulusSchedule,
    classify_response,
    detect_spikes,
    merged_spike_steps,
    period_stats,
)
from bzmarble.analysis import (
    SpikeTrain,
    lit_schedule_from_trace,
    response_report,
    stats_csv,
)

from oracles import brute_period_stats, brute_spikes


def trace_from(values, record_every=1, phis=None):
    trace = PotentialTrace(record_every=record_every)
    for i, v in enumerate(values):
        phi = 0.05 if phis is None else phis[i]
        trace.samples.append((i * record_every, float(v), phi))
    return trace


def triangular_pulse_trace(peak_steps, height=1.0, half_width=20, length=500):
    values = np.zeros(length)
    for p in peak_steps:
        for k in range(-half_width, half_width + 1):
            if 0 <= p + k < length:
                values[p + k] = max(values[p + k], height * (1 - abs(k) / half_width))
    return trace_from(values)


class TestDetect:
    def test_flat_trace_has_no_spikes(self):
        train = detect_spikes(trace_from(np.zeros(200)), 0.1, 0.05)
        assert train.spike_steps == ()

    def test_four_triangular_pulses(self):
        trace = triangular_pulse_trace([100, 200, 300, 400])
        train = detect_spikes(trace, 0.5, 0.2)
        assert train.spike_steps == (100, 200, 300, 400)

    def test_unterminated_excursion_yields_no_spike(self):
        values = np.zeros(100)
        values[50:] = 0.6  # rises past hi and stays between lo and hi forever
        train = detect_spikes(trace_from(values), 0.5, 0.2)
        assert train.spike_steps == ()

    def test_touching_hi_opens_an_excursion(self):
        values = np.zeros(100)
        values[40] = 0.5  # exactly hi
        train = detect_spikes(trace_from(values), 0.5, 0.2)
        assert train.spike_steps == (40,)

    def test_earliest_peak_wins_ties(self):
        values = np.zeros(100)
        values[30:35] = 1.0  # plateau
        train = detect_spikes(trace_from(values), 0.5, 0.2)
        assert train.spike_steps == (30,)

    def test_bad_thresholds_rejected(self):
        with pytest.raises(ValueError):
            detect_spikes(trace_from(np.zeros(10)), 0.1, 0.1)
        with pytest.raises(ValueError):
            detect_spikes(trace_from(np.zeros(10)), 0.1, 0.2)

    @given(exp=st.integers(min_value=-8, max_value=8), seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=40, deadline=None)
    def test_scaling_trace_and_thresholds_together_changes_nothing(self, exp, seed):
        # powers of two rescale floats exactly, so the spike set is identical
        c = 2.0**exp
        rng = np.random.default_rng(seed)
        values = rng.normal(0, 1, 400)
        base = brute_spikes(np.arange(400), values, 0.8, 0.2)
        scaled = detect_spikes(trace_from(values * c), 0.8 * c, 0.2 * c)
        assert list(scaled.spike_steps) == base

    def test_spike_train_requires_increasing_steps(self):
        with pytest.raises(ValueError):
            SpikeTrain(spike_steps=(5, 5), threshold_hi=1.0, threshold_lo=0.0)


class TestMergedPolarities:
    def test_negative_spikes_come_from_the_negated_trace(self):
        values = np.zeros(500)
        values[100] = 1.0
        values[300] = -1.0
        merged = merged_spike_steps(trace_from(values), 0.5, 0.2)
        assert merged == (100, 300)

    def test_flat_trace_with_default_thresholds(self):
        assert merged_spike_steps(trace_from(np.zeros(100))) == ()

    def test_chronological_order(self):
        values = np.zeros(600)
        for p, sign in ((50, -1), (150, 1), (250, -1), (350, 1)):
            values[p] = sign * 1.0
        merged = merged_spike_steps(trace_from(values), 0.5, 0.2)
        assert merged == (50, 150, 250, 350)


class TestPeriodStats:
    def test_equal_gaps(self):
        stats = period_stats([0, 300, 600, 900], dt_per_step=0.1)
        assert stats.n_spikes == 4
        assert stats.mean_period == pytest.approx(30.0, rel=1e-12)
        assert stats.sigma == 0.0
        assert stats.classification == "typical"

    def test_low_frequency_boundary(self):
        stats = period_stats([0, 247, 494], dt_per_step=1.0)
        assert stats.mean_period == pytest.approx(247.0, rel=1e-12)
        assert stats.classification == "low_frequency"
        # 240 exactly is not low frequency (strictly greater required)
        edge = period_stats([0, 240, 480], dt_per_step=1.0)
        assert edge.classification == "typical"

    def test_single_spike_has_absent_stats(self):
        stats = period_stats([123], dt_per_step=0.1)
        assert stats.n_spikes == 1
        assert stats.mean_period is None
        assert stats.sigma is None
        assert stats.classification is None

    @given(
        steps=st.lists(st.integers(0, 10**6), min_size=2, max_size=40, unique=True),
        dt=st.sampled_from([0.001, 0.1, 1.0]),
    )
    @settings(max_examples=60, deadline=None)
    def test_mean_times_gap_count_spans_the_train(self, steps, dt):
        spikes = sorted(steps)
        stats = period_stats(spikes, dt)
        span = (spikes[-1] - spikes[0]) * dt
        assert stats.mean_period * (len(spikes) - 1) == pytest.approx(span, rel=4e-16)

    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=40, deadline=None)
    def test_matches_brute_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(0, 30))
        spikes = sorted(rng.choice(10**6, size=n, replace=False).tolist())
        got = period_stats(spikes, 0.001)
        n_ref, mean_ref, sigma_ref = brute_period_stats(spikes, 0.001)
        assert got.n_spikes == n_ref
        if n_ref < 2:
            assert got.mean_period is None and got.sigma is None
        else:
            assert got.mean_period == pytest.approx(mean_ref, abs=1e-12, rel=1e-12)
            assert got.sigma == pytest.approx(sigma_ref, abs=1e-12, rel=1e-12)


def regular_spike_values(length, period, phase=0, height=1.0):
    values = np.zeros(length)
    for p in range(phase, length, period):
        values[p] = height
    return values


class TestClassifyResponse:
    def build_trace(self, pre_period, post_period, lit=(1000, 2000), length=3000, lit_spikes=()):
        values = np.zeros(length)
        for p in range(0, lit[0], pre_period):
            values[p] = 1.0
        for p in lit_spikes:
            values[p] = 1.0
        for p in range(lit[1] + 37, length, post_period):
            values[p] = 1.0
        phis = np.where((np.arange(length) >= lit[0]) & (np.arange(length) < lit[1]), 0.13, 0.05)
        return trace_from(values, phis=phis)

    def schedule(self, lit=(1000, 2000)):
        return StimulusSchedule(base_phi=0.05, segments=((lit[0], lit[1], 0.13),))

    def test_halting_with_slower_recovery_is_group_a(self):
        trace = self.build_trace(pre_period=30, post_period=60)
        resp = classify_response(trace, self.schedule(), dt_per_step=1.0, hi=0.5, lo=0.2)
        assert resp.halted is True
        assert resp.group == "A"
        assert resp.latency_off == pytest.approx(37.0)
        assert resp.latency_on == 0.0

    def test_faster_recovery_is_group_b(self):
        trace = self.build_trace(pre_period=45, post_period=27)
        resp = classify_response(trace, self.schedule(), dt_per_step=1.0, hi=0.5, lo=0.2)
        assert resp.halted is True
        assert resp.group == "B"

    def test_unchanged_spiking_is_no_response(self):
        length, period = 3000, 50
        values = regular_spike_values(length, period)
        phis = np.where((np.arange(length) >= 1000) & (np.arange(length) < 2000), 0.13, 0.05)
        trace = trace_from(values, phis=phis)
        resp = classify_response(trace, self.schedule(), dt_per_step=1.0, hi=0.5, lo=0.2)
        assert resp.halted is False
        assert resp.group == "none"

    def test_spikes_inside_grace_do_not_unhalt(self):
        # pre period 30 -> grace 30; a straggler at lit_start + 10 is forgiven
        trace = self.build_trace(pre_period=30, post_period=60, lit_spikes=(1010,))
        resp = classify_response(trace, self.schedule(), dt_per_step=1.0, hi=0.5, lo=0.2)
        assert resp.halted is True
        assert resp.latency_on == pytest.approx(10.0)

    def test_no_pre_stimulus_spikes_is_an_error(self):
        values = np.zeros(3000)
        values[2500] = 1.0
        phis = np.where((np.arange(3000) >= 1000) & (np.arange(3000) < 2000), 0.13, 0.05)
        with pytest.raises(ClassificationError):
            classify_response(
                trace_from(values, phis=phis), self.schedule(), dt_per_step=1.0, hi=0.5, lo=0.2
            )

    def test_no_lit_segment_is_an_error(self):
        with pytest.raises(ClassificationError):
            classify_response(
                trace_from(np.zeros(10)), StimulusSchedule(), dt_per_step=1.0, hi=0.5, lo=0.2
            )


class TestTraceScheduleRecovery:
    def test_reconstructs_lit_window(self):
        phis = [0.05] * 10 + [0.13] * 5 + [0.05] * 10
        trace = trace_from(np.zeros(25), record_every=10, phis=phis)
        sched = lit_schedule_from_trace(trace)
        assert sched is not None
        assert sched.base_phi == 0.05
        assert sched.segments == ((100, 150, 0.13),)

    def test_dark_trace_gives_none(self):
        assert lit_schedule_from_trace(trace_from(np.zeros(10))) is None


class TestReports:
    def test_stats_csv_layout(self):
        stats = period_stats([0, 300, 600], dt_per_step=0.1)
        text = stats_csv(stats)
        lines = text.splitlines()
        assert lines[0] == "n_spikes,mean_period,sigma,classification"
        assert lines[1].startswith("3,30.0")
        assert lines[1].endswith(",typical")

    def test_stats_csv_absent_values(self):
        text = stats_csv(period_stats([5], dt_per_step=0.1))
        assert text.splitlines()[1] == "1,,,"

    def test_response_report_key_order(self):
        from bzmarble.analysis import StimulusResponse

        text = response_report(
            StimulusResponse(halted=True, latency_on=0.0, latency_off=12.5, group="A")
        )
        keys = [line.split(":")[0].strip().strip('"') for line in text.splitlines()[1:-1]]
        assert keys == ["halted", "latency_on", "latency_off", "group"]
        assert '"halted": true' in text
        assert '"latency_off": 12.5' in text

    def test_response_report_null_latency(self):
        from bzmarble.analysis import StimulusResponse

        text = response_report(
            StimulusResponse(halted=True, latency_on=0.0, latency_off=None, group="none")
        )
        assert '"latency_off": null' in text


class TestOracleEquivalence:
    @given(seed=st.integers(0, 2**31 - 1))
    @settings(max_examples=50, deadline=None)
    def test_random_traces_match_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(10, 2000))
        base = rng.normal(0, 0.5, n)
        # add some pulse structure so spikes actually occur
        for p in rng.choice(n, size=max(1, n // 100), replace=False):
            base[p : p + 5] += rng.uniform(1, 3)
        hi = float(rng.uniform(0.5, 1.5))
        lo = float(rng.uniform(-0.5, hi - 0.1))
        steps = np.arange(n) * 10
        trace = PotentialTrace(record_every=10)
        trace.samples = [(int(s), float(v), 0.05) for s, v in zip(steps, base)]
        got = detect_spikes(trace, hi, lo)
        ref = brute_spikes(steps, base, hi, lo)
        assert list(got.spike_steps) == ref
