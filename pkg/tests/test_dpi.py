import math

import pytest

from homeoscale import (DeviceParams, DpiParams, DpiState, SynapseBank,
                        dpi_crossing_time, dpi_evolve, dpi_steady_state,
                        dpi_time_constant, total_weight_current, v_syn_from_current)
from homeoscale.errors import DomainError, ValidationError

P = DpiParams(dev=DeviceParams())


class TestTimeConstant:
    def test_value(self):
        # 1 pF * 25.8 mV / (0.7 * 10 pA)
        assert dpi_time_constant(P) == pytest.approx(3.6857e-3, rel=1e-4)

    def test_doubling_bias_halves_tau(self):
        p2 = DpiParams(i_tau=2 * P.i_tau, dev=P.dev)
        assert dpi_time_constant(p2) == pytest.approx(dpi_time_constant(P) / 2, rel=1e-12)

    def test_doubling_cap_doubles_tau(self):
        p2 = DpiParams(c_dpi=2 * P.c_dpi, dev=P.dev)
        assert dpi_time_constant(p2) == pytest.approx(2 * dpi_time_constant(P), rel=1e-12)


class TestWeightCurrent:
    def test_dc_only(self):
        bank = SynapseBank(weights=[1e-9, 2e-9], i_dc=0.3e-9)
        assert total_weight_current(bank, set()) == 0.3e-9

    def test_empty_bank_zero_dc(self):
        assert total_weight_current(SynapseBank(weights=[]), set()) == 0.0

    def test_two_active(self):
        bank = SynapseBank(weights=[1e-9, 1e-9, 5e-9])
        assert total_weight_current(bank, {0, 1}) == pytest.approx(2e-9, rel=1e-12)

    def test_bad_index(self):
        with pytest.raises(ValidationError):
            total_weight_current(SynapseBank(weights=[1e-9]), {3})


class TestSteadyState:
    def test_reference_lock_point(self):
        # the gain that holds 20 nA at a 0.3 nA drive with a 10 pA bias
        assert dpi_steady_state(0.3e-9, 0.667e-9, P) == pytest.approx(20e-9, rel=2e-3)

    def test_zero_drive(self):
        assert dpi_steady_state(0.0, 1e-9, P) == 0.0

    def test_linear_in_drive(self):
        one = dpi_steady_state(1e-9, 1e-9, P)
        assert dpi_steady_state(2e-9, 1e-9, P) == pytest.approx(2 * one, rel=1e-12)


class TestEvolve:
    def test_zero_dt_identity(self):
        s = DpiState(i_syn=5e-9, t=1.0)
        out = dpi_evolve(s, 0.0, 1e-9, 1e-9, P)
        assert out.i_syn == s.i_syn and out.t == s.t

    def test_one_tau_step_response(self):
        tau = dpi_time_constant(P)
        i_ss = dpi_steady_state(1e-9, 1e-9, P)
        out = dpi_evolve(DpiState(), tau, 1e-9, 1e-9, P)
        assert out.i_syn == pytest.approx((1 - math.exp(-1)) * i_ss, rel=1e-12)

    def test_against_dense_euler_oracle(self):
        # forward-Euler with step tau/1e4 over 5 tau, constant drive
        tau = dpi_time_constant(P)
        i_w, i_gain = 0.5e-9, 1e-9
        i_ss = dpi_steady_state(i_w, i_gain, P)
        dt = tau / 1e4
        x = 0.0
        for _ in range(int(5e4)):
            x += dt * (i_ss - x) / tau
        exact = dpi_evolve(DpiState(), 5 * tau, i_w, i_gain, P).i_syn
        assert exact == pytest.approx(x, rel=1e-3)

    def test_negative_dt_rejected(self):
        with pytest.raises(DomainError):
            dpi_evolve(DpiState(), -1e-3, 1e-9, 1e-9, P)

    def test_stays_nonnegative(self):
        s = DpiState(i_syn=1e-9)
        for _ in range(50):
            s = dpi_evolve(s, 1e-3, 0.0, 0.0, P)
            assert s.i_syn >= 0.0


class TestCrossingTime:
    def test_already_at_target(self):
        s = DpiState(i_syn=3e-9)
        assert dpi_crossing_time(s, 3e-9, 1e-9, 1e-9, P) == 0.0

    def test_steady_state_unreachable(self):
        i_ss = dpi_steady_state(1e-9, 1e-9, P)
        assert dpi_crossing_time(DpiState(), i_ss, 1e-9, 1e-9, P) is None

    def test_halfway_is_tau_ln2(self):
        tau = dpi_time_constant(P)
        i_ss = dpi_steady_state(1e-9, 1e-9, P)
        dt = dpi_crossing_time(DpiState(), 0.5 * i_ss, 1e-9, 1e-9, P)
        assert dt == pytest.approx(tau * math.log(2.0), rel=1e-12)

    def test_target_behind_is_unreachable(self):
        # rising toward i_ss: anything below the current value is never hit
        s = DpiState(i_syn=1e-9)
        i_ss = dpi_steady_state(1e-9, 1e-9, P)
        assert i_ss > 1e-9
        assert dpi_crossing_time(s, 0.5e-9, 1e-9, 1e-9, P) is None

    def test_compose_with_evolve_lands_on_target(self):
        s = DpiState(i_syn=8e-9)
        target = 2e-9
        dt = dpi_crossing_time(s, target, 0.01e-9, 1e-9, P)
        assert dt is not None
        out = dpi_evolve(s, dt, 0.01e-9, 1e-9, P)
        assert out.i_syn == pytest.approx(target, rel=1e-9)


class TestScalingInvariance:
    def test_weight_ratios_independent_of_gain(self):
        # the shared gain rescales every synapse identically
        w_i, w_j = 0.7e-9, 0.2e-9
        for gain in (1e-12, 1e-10, 1e-8):
            c_i = dpi_steady_state(w_i, gain, P)
            c_j = dpi_steady_state(w_j, gain, P)
            assert c_i / c_j == pytest.approx(w_i / w_j, rel=1e-12)


class TestVsynObservable:
    def test_matches_gain_law_inverse(self):
        dev = P.dev
        i = 1e-9
        v = v_syn_from_current(i, dev)
        back = dev.i0 * math.exp(dev.kappa * (dev.vdd - v) / dev.u_t)
        assert back == pytest.approx(i, rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            v_syn_from_current(0.0, P.dev)
