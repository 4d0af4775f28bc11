import math

import pytest

from homeoscale import (AgcRefs, DeviceParams, LeakageCellParams, apply_sw,
                        chatter_period, comparator, default_leakage_calibration,
                        gain_current, llc_slope, predict_recovery_time, reset,
                        select_vds, slope_for_recovery)
from homeoscale.errors import DomainError, ValidationError

DEV = DeviceParams()
REFS = AgcRefs()


class TestComparator:
    def test_tie_holds_previous(self):
        for prev in (0, 1):
            assert comparator(REFS.i_ref, prev, REFS) == prev

    def test_above_band_sets_high(self):
        refs = AgcRefs(hysteresis_eps=0.01)
        assert comparator(1.05 * refs.i_ref, 0, refs) == 1

    def test_drive_above_reference_triggers_downregulation(self):
        refs = AgcRefs(i_ref=20e-9, hysteresis_eps=0.0)
        assert comparator(21e-9, 0, refs) == 1

    def test_below_band_sets_low(self):
        refs = AgcRefs(hysteresis_eps=0.01)
        assert comparator(0.9 * refs.i_ref, 1, refs) == 0

    def test_deadband_holds_state(self):
        refs = AgcRefs(hysteresis_eps=0.01)
        assert comparator(1.005 * refs.i_ref, 0, refs) == 0
        assert comparator(0.995 * refs.i_ref, 1, refs) == 1


class TestSelectVds:
    def test_high_switch_gives_plus_two_millivolts(self):
        assert select_vds(1, REFS) == pytest.approx(2e-3, rel=1e-12)

    def test_low_switch_gives_minus_two_millivolts(self):
        assert select_vds(0, REFS) == pytest.approx(-2e-3, rel=1e-12)

    def test_symmetric_references(self):
        refs = AgcRefs(v_ref_h=1.385, v_ref_m=1.382, v_ref_l=1.379)
        assert select_vds(1, refs) == pytest.approx(-select_vds(0, refs), rel=1e-12)


class TestRamp:
    def test_continuity_at_toggle(self):
        state = reset(REFS, 0.0, slope_down=0.45e-6)
        v_before = state.v_thr(1000.0)
        apply_sw(state, 1, 1000.0, 1.5e-6, 0.45e-6)
        assert abs(state.v_thr(1000.0) - v_before) <= 1e-15

    def test_no_change_without_toggle(self):
        state = reset(REFS, 0.0, slope_down=0.45e-6)
        anchor = (state.ramp_anchor_t, state.ramp_anchor_v, state.ramp_slope)
        apply_sw(state, 0, 50.0, 1.5e-6, 0.45e-6)
        assert (state.ramp_anchor_t, state.ramp_anchor_v, state.ramp_slope) == anchor
        assert state.toggle_count == 0

    def test_hundred_kilosecond_ramp_excursion(self):
        # 1.5 uV/s held 100 ks -> +150 mV, exactly
        state = reset(REFS, 0.0, slope_down=0.45e-6)
        apply_sw(state, 1, 0.0, 1.5e-6, 0.45e-6)
        assert state.v_thr(100e3) - state.ramp_anchor_v == pytest.approx(0.15, rel=1e-12)

    def test_time_regression_rejected(self):
        state = reset(REFS, 10.0, slope_down=1e-6)
        with pytest.raises(ValidationError):
            apply_sw(state, 1, 5.0, 1e-6, 1e-6)

    def test_reset_anchors_at_mid_reference(self):
        state = reset(REFS, 3.0, slope_down=1e-6)
        assert state.v_thr(3.0) == REFS.v_ref_m
        assert state.sw == 0
        assert state.ramp_slope < 0
        again = reset(REFS, 99.0, slope_down=1e-6)
        assert again.ramp_anchor_v == state.ramp_anchor_v

    def test_charge_bookkeeping_between_toggles(self):
        # dV * C_F equals the integrated calibrated leakage current exactly
        cell = LeakageCellParams()
        calib = default_leakage_calibration(DEV)
        slope = llc_slope(1.72, "up", calib, cell)
        state = reset(REFS, 0.0, slope_down=0.45e-6)
        apply_sw(state, 1, 0.0, slope, 0.45e-6)
        dt = 5e4
        dv = state.v_thr(dt) - state.v_thr(0.0)
        i_cal = slope * cell.c_f
        assert dv * cell.c_f == pytest.approx(i_cal * dt, rel=1e-12)


class TestRecoveryPrediction:
    def test_sixty_seconds(self):
        slope = (DEV.u_t / DEV.kappa) * math.log(2.0) / 60.0
        assert predict_recovery_time(2.0, slope, DEV) == pytest.approx(60.0, rel=1e-12)

    def test_unity_ratio_needs_no_time(self):
        assert predict_recovery_time(1.0, 1e-6, DEV) == 0.0

    def test_half_slope_doubles_time(self):
        t1 = predict_recovery_time(2.0, 1e-6, DEV)
        t2 = predict_recovery_time(2.0, 0.5e-6, DEV)
        assert t2 == pytest.approx(2 * t1, rel=1e-12)

    def test_inverse(self):
        s = slope_for_recovery(2.0, 75.0, DEV)
        assert predict_recovery_time(2.0, s, DEV) == pytest.approx(75.0, rel=1e-12)

    def test_reciprocal_ratios_match(self):
        assert predict_recovery_time(2.0, 1e-6, DEV) == pytest.approx(
            predict_recovery_time(0.5, 1e-6, DEV), rel=1e-12)


class TestChatterPeriod:
    def test_symmetric_slope_value(self):
        refs = AgcRefs(hysteresis_eps=1e-3)
        s = (DEV.u_t / DEV.kappa) * math.log(2.0) / 60.0
        period = chatter_period(s, s, refs, DEV)
        dv = (DEV.u_t / DEV.kappa) * math.log(1.001 / 0.999)
        assert period == pytest.approx(dv * 2.0 / s, rel=1e-12)
        assert 1.0 <= 1.0 / period <= 40.0  # inside the locked-region band

    def test_doubling_slopes_halves_period(self):
        refs = AgcRefs(hysteresis_eps=1e-3)
        assert chatter_period(2e-6, 2e-6, refs, DEV) == pytest.approx(
            chatter_period(1e-6, 1e-6, refs, DEV) / 2, rel=1e-12)

    def test_zero_deadband_undefined(self):
        with pytest.raises(DomainError):
            chatter_period(1e-6, 1e-6, AgcRefs(hysteresis_eps=0.0), DEV)


class TestNegativeFeedbackDirection:
    def test_high_drive_ramps_gain_down(self):
        state = reset(REFS, 0.0, slope_down=1e-6)
        i_syn = REFS.i_ref * 1.01
        new_sw = comparator(i_syn, state.sw, REFS)
        assert new_sw == 1
        apply_sw(state, new_sw, 0.0, 1e-6, 1e-6)
        g0 = gain_current(state.v_thr(0.0), DEV)
        g1 = gain_current(state.v_thr(100.0), DEV)
        assert g1 < g0

    def test_low_drive_ramps_gain_up(self):
        state = reset(REFS, 0.0, slope_down=1e-6)
        apply_sw(state, 1, 0.0, 1e-6, 1e-6)
        i_syn = REFS.i_ref * 0.99
        new_sw = comparator(i_syn, state.sw, REFS)
        assert new_sw == 0
        apply_sw(state, new_sw, 10.0, 1e-6, 1e-6)
        g0 = gain_current(state.v_thr(10.0), DEV)
        g1 = gain_current(state.v_thr(110.0), DEV)
        assert g1 > g0


class TestRefsValidation:
    def test_reference_ordering(self):
        with pytest.raises(ValidationError):
            AgcRefs(v_ref_l=1.384, v_ref_h=1.380)

    def test_eps_range(self):
        with pytest.raises(ValidationError):
            AgcRefs(hysteresis_eps=1.0)
