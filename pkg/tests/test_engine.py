import io
import math
import os

import numpy as np
import pytest

from homeoscale import (AgcRefs, DeviceParams, EngineTolerances, Trace,
                        build_step_response, chatter_period, derive_seed,
                        poisson_train, run, segment_bound)
from homeoscale.errors import DomainError, ValidationError

DEV = DeviceParams()


class TestPoissonTrain:
    def test_zero_rate_empty(self):
        assert poisson_train(0.0, 10.0, 1).size == 0

    def test_count_within_three_sigma(self):
        for seed in (1, 7, 99):
            n = poisson_train(100.0, 10.0, seed).size
            assert 1000 - 95 <= n <= 1000 + 95

    def test_sorted_and_inside_horizon(self):
        ts = poisson_train(200.0, 5.0, 3)
        assert np.all(np.diff(ts) >= 0)
        assert ts.min() >= 0.0 and ts.max() < 5.0

    def test_seed_determinism(self):
        a = poisson_train(100.0, 10.0, 42)
        b = poisson_train(100.0, 10.0, 42)
        assert np.array_equal(a, b)
        c = poisson_train(100.0, 10.0, 43)
        assert not np.array_equal(a, c)

    def test_negative_rate_rejected(self):
        with pytest.raises(DomainError):
            poisson_train(-1.0, 1.0, 0)


class TestSegmentBound:
    TOL = EngineTolerances(sample_interval=0.1)

    def test_zero_slope_degenerate(self):
        assert segment_bound(0.0, 3.0, self.TOL, DEV) == 3.0
        assert segment_bound(0.0, 1e9, self.TOL, DEV) == self.TOL.max_segment

    def test_gain_drift_bound_value(self):
        # eta * u_t / (kappa * slope) at the attoampere down-slope
        got = segment_bound(0.45e-6, 1e9, self.TOL, DEV)
        assert got == pytest.approx(1e-3 * DEV.u_t / (DEV.kappa * 0.45e-6), rel=1e-12)
        assert got == pytest.approx(81.9, rel=1e-3)

    def test_event_wins_when_close(self):
        assert segment_bound(0.45e-6, 1e-3, self.TOL, DEV) == 1e-3


class TestRunBasics:
    def test_zero_horizon_initial_sample_only(self):
        exp = build_step_response(0.3e-9, 0.3e-9, 0.0, horizon=1.0, name="z")
        exp.horizon = 0.0
        exp.dc_schedule = []
        tr = run(exp)
        assert len(tr) == 1
        assert tr.column("t")[0] == 0.0

    def test_constant_drive_locks_at_reference(self):
        exp = build_step_response(0.3e-9, 0.3e-9, 10.0, horizon=40.0, name="lock")
        tr = run(exp, seed=0)
        t = tr.column("t")
        i_syn = tr.column("i_syn")
        rate = tr.column("rate")
        tail = t > 20.0
        assert np.all(np.abs(i_syn[tail] - 20e-9) <= 0.002 * 20e-9)
        assert rate[tail].mean() == pytest.approx(100.0, rel=0.01)

    def test_seed_determinism_bit_identical(self):
        exp = build_step_response(0.3e-9, 0.6e-9, 5.0, horizon=20.0, name="det")
        a, b = run(exp, seed=9), run(exp, seed=9)
        bufs = []
        for tr in (a, b):
            buf = io.StringIO()
            for name in Trace.COLUMNS:
                buf.write(",".join(f"{v:.17g}" for v in tr.cols[name]))
            bufs.append(buf.getvalue())
        assert bufs[0] == bufs[1]

    def test_trace_time_strictly_increasing(self):
        exp = build_step_response(0.3e-9, 0.6e-9, 5.0, horizon=30.0, name="mono")
        tr = run(exp, seed=1)
        assert np.all(np.diff(tr.column("t")) > 0)

    def test_every_toggle_has_straddling_rows(self):
        exp = build_step_response(0.3e-9, 0.3e-9, 5.0, horizon=10.0, name="tog")
        tr = run(exp, seed=1)
        t = tr.column("t")
        sw = tr.column("sw")
        changes = np.nonzero(np.diff(sw) != 0)[0]
        assert changes.size > 0
        # each toggle is bracketed by a pre-row and the toggle row itself
        for j in changes:
            assert t[j] < t[j + 1]

    def test_bad_v_g_aborts_before_start(self):
        exp = build_step_response(0.3e-9, 0.6e-9, 5.0, horizon=20.0, name="bad")
        exp.v_g = 0.5
        with pytest.raises(ValidationError):
            run(exp)

    def test_eta_halving_convergence(self):
        # final-time output mid-recovery moves by less than eta when the
        # drift bound is halved
        exp = build_step_response(0.3e-9, 0.6e-9, 10.0, horizon=40.0, name="eta")
        si = exp.default_tolerances().sample_interval
        a = run(exp, tol=EngineTolerances(gain_drift_eta=1e-3, sample_interval=si), seed=0)
        b = run(exp, tol=EngineTolerances(gain_drift_eta=5e-4, sample_interval=si), seed=0)
        ia = a.column("i_syn")[-1]
        ib = b.column("i_syn")[-1]
        assert abs(ia - ib) / ia < 1e-3

    def test_zero_deadband_terminates_and_regulates(self):
        refs = AgcRefs(hysteresis_eps=0.0)
        exp = build_step_response(0.3e-9, 0.3e-9, 5.0, horizon=20.0, refs=refs, name="eps0")
        tr = run(exp, seed=8)
        i_syn = tr.column("i_syn")
        t = tr.column("t")
        tail = t > 5.0
        assert np.all(np.abs(i_syn[tail] / 20e-9 - 1.0) < 0.005)


class TestOracleEquivalence:
    def test_five_second_step_slice(self):
        from euler_oracle import euler_cosim
        from homeoscale.engine import locked_anchor_voltage

        exp = build_step_response(0.3e-9, 0.6e-9, 0.0, horizon=5.0, v_g=1.42,
                                  name="slice", sample_interval=0.01)
        tr = run(exp, seed=0)
        v0 = locked_anchor_voltage(exp, 0.3e-9)
        dt = 1e-5
        times, isyn_o, toggles_o, _ = euler_cosim(exp, v0, exp.refs.i_ref,
                                                  0.6e-9, 5.0, dt=dt)
        t_r = tr.column("t")
        i_r = tr.column("i_syn")
        idx = np.clip(np.round(t_r / dt).astype(int), 0, isyn_o.size - 1)
        rel = np.abs(i_r - isyn_o[idx]) / isyn_o[idx]
        assert rel.max() < 0.005
        sw_r = tr.column("sw")
        changes = np.nonzero(np.diff(sw_r) != 0)[0]
        toggles_e = t_r[changes + 1]
        assert len(toggles_e) == len(toggles_o) == 1
        assert abs(toggles_e[0] - toggles_o[0]) <= dt


class TestTraceIO:
    def test_csv_round_trip(self, tmp_path):
        exp = build_step_response(0.3e-9, 0.6e-9, 2.0, horizon=8.0, name="io")
        tr = run(exp, seed=5)
        path = tmp_path / "trace.csv"
        tr.to_csv(path)
        with open(path) as fh:
            assert fh.readline().strip() == "t,i_syn,v_thr,sw,rate,i_w_total,i_gain,i_dc"
        back = Trace.from_csv(path)
        assert len(back) == len(tr)
        # 12 significant digits round-trip within 1 ulp at parse
        for name in Trace.COLUMNS:
            a = tr.column(name)
            b = back.column(name)
            scale = np.maximum(np.abs(a), 1e-300)
            assert np.max(np.abs(a - b) / scale) < 1e-11

    def test_meta_sidecar(self, tmp_path):
        exp = build_step_response(0.3e-9, 0.6e-9, 2.0, horizon=6.0, name="meta")
        tr = run(exp, seed=2)
        path = tmp_path / "meta.txt"
        tr.write_meta(path)
        text = path.read_text()
        assert "seed=2" in text
        assert "config_digest=" in text
        assert "version=" in text


class TestDeriveSeed:
    def test_stable_and_distinct(self):
        assert derive_seed(1, "spikes", 0) == derive_seed(1, "spikes", 0)
        assert derive_seed(1, "spikes", 0) != derive_seed(1, "spikes", 1)
        assert derive_seed(1, 0) != derive_seed(2, 0)


class TestEventType:
    def test_kind_names_ordered(self):
        from homeoscale import Event
        from homeoscale.engine import EVENT_KINDS
        assert EVENT_KINDS == ("stimulus_edge", "pulse_end", "comparator_cross",
                               "spike", "sample", "end")
        assert Event(1.0, 2).kind_name() == "comparator_cross"

    def test_time_must_be_finite_non_negative(self):
        from homeoscale import Event
        with pytest.raises(ValidationError):
            Event(-1.0, 0)
        with pytest.raises(ValidationError):
            Event(math.inf, 0)
