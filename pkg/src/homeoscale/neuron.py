"""Charge-accumulation integrate-and-fire neuron with a rate estimator.

The membrane is reduced to a charge counter: dq/dt = I - I_leak (never
negative), a spike when q reaches the charge threshold, then a reset and
an absolute refractory period. Under constant drive this gives the
analytic rate law 1 / (rho + Q_th / (I - I_leak)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import CalibrationError, DomainError, ValidationError


@dataclass(frozen=True)
class NeuronParams:
    """Charge threshold, membrane leak, refractory period, adaptation step."""

    q_th: float
    rho: float
    i_leak: float = 0.0
    adapt_q: float = 0.0

    def __post_init__(self):
        if self.q_th <= 0:
            raise ValidationError("q_th must be positive")
        if self.rho < 0 or self.i_leak < 0 or self.adapt_q < 0:
            raise ValidationError("rho, i_leak and adapt_q must be non-negative")


@dataclass
class NeuronState:
    """Accumulated charge, refractory deadline, rate estimate, spike history.

    ``adapt`` is the accumulated per-spike adaptation charge; the firing
    threshold is q_th + adapt, so q stays within [0, q_th + adapt].
    """

    q: float = 0.0
    refractory_until: float = -math.inf
    rate_estimate: float = 0.0
    last_spike: float | None = None
    adapt: float = 0.0


def rate_from_current(i: float, p: NeuronParams) -> float:
    """Steady firing rate under constant drive i; 0 below the leak current."""
    if i < 0:
        raise DomainError("drive current must be non-negative")
    if i <= p.i_leak:
        return 0.0
    return 1.0 / (p.rho + p.q_th / (i - p.i_leak))


def current_for_rate(f: float, p: NeuronParams) -> float:
    """Inverse of rate_from_current for 0 < f < 1/rho."""
    if f <= 0:
        raise DomainError("rate must be positive")
    isi = 1.0 / f
    if isi <= p.rho:
        raise DomainError(f"rate {f:g} Hz exceeds the refractory ceiling {1.0 / p.rho:g} Hz")
    return p.i_leak + p.q_th / (isi - p.rho)


def calibrate_neuron(point_a, point_b) -> NeuronParams:
    """Solve (q_th, rho) from two (current, rate) observations.

    Uses 1/f = rho + q_th / I at both points; leak and adaptation are
    zero. Inconsistent observations (equal currents or rates, ordering
    mismatch, implied rho < 0 or q_th <= 0) raise CalibrationError.
    """
    i_a, f_a = float(point_a[0]), float(point_a[1])
    i_b, f_b = float(point_b[0]), float(point_b[1])
    if f_a <= 0 or f_b <= 0:
        raise CalibrationError("calibration rates must be positive")
    if i_a == i_b:
        raise CalibrationError("calibration currents must be distinct")
    if f_a == f_b:
        raise CalibrationError("calibration rates must be distinct")
    if (i_a < i_b) != (f_a < f_b):
        raise CalibrationError("higher current must give higher rate")
    q_th = (1.0 / f_a - 1.0 / f_b) / (1.0 / i_a - 1.0 / i_b)
    rho = 1.0 / f_a - q_th / i_a
    if q_th <= 0:
        raise CalibrationError(f"calibration implies q_th = {q_th:g} <= 0")
    if rho < 0:
        raise CalibrationError(f"calibration implies rho = {rho:g} < 0")
    return NeuronParams(q_th=q_th, rho=rho)


def update_rate_estimate(s: NeuronState, spike_t: float, window: float) -> float:
    """Exponential moving average of the inverse inter-spike interval.

    The first spike only seeds the history; later spikes blend 1/ISI in
    with weight 1 - exp(-ISI/window). Spike times must not go backwards.
    """
    if s.last_spike is not None:
        if spike_t < s.last_spike:
            raise ValidationError(
                f"spike at t={spike_t:g} precedes last spike at t={s.last_spike:g}")
        isi = spike_t - s.last_spike
        if isi > 0:
            alpha = 1.0 - math.exp(-isi / window)
            s.rate_estimate += alpha * (1.0 / isi - s.rate_estimate)
    s.last_spike = spike_t
    return s.rate_estimate


def next_spike_time(s: NeuronState, t0: float, t1: float, i_syn: float,
                    p: NeuronParams, rate_window: float | None = None):
    """First spike time in [t0, t1] under constant drive, or None.

    Integrates dq/dt = max(i_syn - i_leak, 0) from the current charge,
    honoring the refractory deadline. On a spike the charge resets, the
    refractory deadline and adaptation advance, and (when rate_window is
    given) the rate estimator updates. Without a spike the charge carried
    in the state advances to t1.
    """
    if i_syn < 0:
        raise DomainError("drive must be non-negative")
    if t1 < t0:
        raise DomainError("segment end precedes segment start")
    start = max(t0, s.refractory_until)
    if start >= t1:
        return None
    net = i_syn - p.i_leak
    if net <= 0:
        return None  # leak stalls integration; charge never drains below q
    need = p.q_th + s.adapt - s.q
    t_spike = start + need / net
    if t_spike > t1:
        s.q += net * (t1 - start)
        return None
    s.q = 0.0
    s.adapt += p.adapt_q
    s.refractory_until = t_spike + p.rho
    if rate_window is not None:
        update_rate_estimate(s, t_spike, rate_window)
    else:
        if s.last_spike is not None and t_spike < s.last_spike:
            raise ValidationError("spike times must be non-decreasing")
        s.last_spike = t_spike
    return t_spike
