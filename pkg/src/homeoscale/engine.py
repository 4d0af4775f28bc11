"""Multi-rate event-driven simulation kernel.

Splits time at stimulus edges, predicted comparator crossings, and neuron
spikes; between events every state advances in closed form. The gain
current is held constant within each segment with a bounded relative
drift, which is what lets a 144 ks experiment run in a few thousand
segments instead of billions of integrator steps.
"""

from __future__ import annotations

import hashlib
import math
from array import array
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from . import agc as agc_mod
from . import dpi as dpi_mod
from . import neuron as neuron_mod
from .device import DeviceParams, Diagnostics, llc_slope
from .errors import DomainError, SimulationError, ValidationError

if TYPE_CHECKING:  # pragma: no cover
    from .experiments import Experiment

# Event kinds in deterministic tie-break order.
EVENT_KINDS = ("stimulus_edge", "pulse_end", "comparator_cross", "spike", "sample", "end")
K_STIMULUS, K_PULSE_END, K_CROSS, K_SPIKE, K_SAMPLE, K_END = range(6)

# Segment refinement near the hysteresis band: without it the frozen-gain
# march quantizes the locked limit cycle too coarsely to measure its
# period (the band is 2*eps wide in log-gain; the default drift bound
# moves log-gain by a full eps per segment).
LOCK_ETA_DIVISOR = 5.0


@dataclass(frozen=True)
class Event:
    """A timestamped simulation event; processed in (t, kind, insertion) order."""

    t: float
    kind: int

    def __post_init__(self):
        if not (self.t >= 0.0 and math.isfinite(self.t)):
            raise ValidationError("event time must be finite and non-negative")

    def kind_name(self) -> str:
        return EVENT_KINDS[self.kind]


@dataclass(frozen=True)
class EngineTolerances:
    """Step-control knobs for the quasi-static factorization."""

    gain_drift_eta: float = 1e-3
    sample_interval: float = 0.1
    max_segment: float = 1e4

    def __post_init__(self):
        if not 0 < self.gain_drift_eta < 0.1:
            raise ValidationError("gain_drift_eta must be in (0, 0.1)")
        if self.sample_interval <= 0:
            raise ValidationError("sample_interval must be positive")
        if self.max_segment <= 0:
            raise ValidationError("max_segment must be positive")


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary labeled parts (sweep/run/synapse)."""
    blob = "\x1f".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big")


def poisson_train(rate: float, horizon: float, seed: int) -> np.ndarray:
    """Homogeneous Poisson spike times on [0, horizon), sorted.

    Gaps are inverse-CDF exponentials, -log1p(-u)/rate, drawn from a
    Philox counter-based generator so the train is reproducible across
    platforms for a given seed.
    """
    if rate < 0:
        raise DomainError("rate must be non-negative")
    if rate == 0 or horizon <= 0:
        return np.empty(0)
    gen = np.random.Generator(np.random.Philox(key=seed))
    chunk = max(16, int(rate * horizon * 1.2) + 16)
    pieces = []
    t = 0.0
    while True:
        u = gen.random(chunk)
        ts = t + np.cumsum(-np.log1p(-u) / rate)
        inside = ts[ts < horizon]
        pieces.append(inside)
        if inside.size < ts.size:
            break
        t = ts[-1]
    return np.concatenate(pieces)


def segment_bound(ramp_slope: float, next_event_dt: float, tol: EngineTolerances,
                  dev: DeviceParams) -> float:
    """Largest admissible segment: next event, gain-drift bound, hard cap.

    The gain-drift term is the time for the relative gain change under the
    current ramp to reach gain_drift_eta: eta * u_t / (kappa * |slope|).
    """
    bound = min(next_event_dt, tol.max_segment)
    if ramp_slope != 0.0:
        bound = min(bound, tol.gain_drift_eta * dev.u_t / (dev.kappa * abs(ramp_slope)))
    return bound


class Trace:
    """Timestamped run record: sampled columns, metadata, weight log."""

    COLUMNS = ("t", "i_syn", "v_thr", "sw", "rate", "i_w_total", "i_gain", "i_dc")

    def __init__(self, meta: dict | None = None):
        self.cols = {name: array("d") for name in self.COLUMNS}
        self.meta: dict = dict(meta or {})
        self.weight_log: list = []  # (t, synapse index, weight current)
        self._arrs = tuple(self.cols[name] for name in self.COLUMNS)

    def __len__(self) -> int:
        return len(self._arrs[0])

    def add(self, t, i_syn, v_thr, sw, rate, i_w_total, i_gain, i_dc):
        arrs = self._arrs
        ts = arrs[0]
        if ts:
            last = ts[-1]
            if t == last:
                # one row per instant; the latest (post-transition) values win
                row = (t, i_syn, v_thr, float(sw), rate, i_w_total, i_gain, i_dc)
                for a, v in zip(arrs, row):
                    a[-1] = v
                return
            if t < last:
                raise SimulationError(f"trace time went backwards: {t} after {last}")
        ts.append(t)
        arrs[1].append(i_syn)
        arrs[2].append(v_thr)
        arrs[3].append(float(sw))
        arrs[4].append(rate)
        arrs[5].append(i_w_total)
        arrs[6].append(i_gain)
        arrs[7].append(i_dc)

    def column(self, name: str) -> np.ndarray:
        return np.frombuffer(self.cols[name], dtype=np.float64).copy()

    def arrays(self) -> dict:
        return {name: self.column(name) for name in self.COLUMNS}

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(self.COLUMNS) + "\n")
            for row in zip(*self._arrs):
                fh.write(",".join(f"{v:.12g}" for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "Trace":
        tr = cls()
        with open(path) as fh:
            header = fh.readline().strip()
            if header != ",".join(cls.COLUMNS):
                raise ValidationError(f"unexpected trace header: {header!r}")
            for line in fh:
                for a, text in zip(tr._arrs, line.split(",")):
                    a.append(float(text))
        return tr

    def write_meta(self, path):
        with open(path, "w") as fh:
            for k in sorted(self.meta):
                fh.write(f"{k}={self.meta[k]}\n")


def mean_weight_current(exp) -> float:
    """Time-averaged drive at the initial weights: DC branch plus the
    rate * pulse_width duty cycle of each spiking input."""
    total = exp.bank.i_dc
    for idx, source in exp.spike_inputs:
        if isinstance(source, (int, float)):
            rate = float(source)
        else:
            times = np.asarray(source, dtype=float)
            rate = times.size / exp.horizon if exp.horizon > 0 else 0.0
        duty = min(1.0, rate * exp.bank.pulse_width)
        total += exp.bank.weights[idx] * duty
    return total


def locked_anchor_voltage(exp, mean_i_w: float) -> float:
    """Threshold voltage at which the loop holds i_syn at i_ref."""
    dev = exp.system.dev
    g_star = exp.refs.i_ref * exp.system.dpi.i_tau / mean_i_w
    return dev.vdd - (dev.u_t / dev.kappa) * math.log(g_star / dev.i0)


def run(experiment: "Experiment", tol: EngineTolerances | None = None,
        seed: int = 0) -> Trace:
    """Execute one experiment and return its trace.

    Identical (experiment, tol, seed) triples produce bit-identical
    traces. Configuration problems abort with ValidationError before any
    model time elapses.
    """
    exp = experiment
    exp.validate()
    if tol is None:
        tol = exp.default_tolerances()

    dev = exp.system.dev
    dpi_p = exp.system.dpi
    refs = exp.refs
    diag = Diagnostics()

    slope_up = llc_slope(exp.v_g, "up", exp.system.calib, exp.system.cell) * exp.slope_scale[0]
    slope_down = llc_slope(exp.v_g, "down", exp.system.calib, exp.system.cell) * exp.slope_scale[1]
    np_ = exp.resolved_neuron_params()
    tau_s = dpi_mod.dpi_time_constant(dpi_p)
    horizon = exp.horizon
    spike_mode = exp.neuron_mode == "spike"
    teacher = exp.teacher_current

    # --- materialize the scheduled event timeline --------------------------
    events: list = []  # (t, kind, seq, action, payload)

    def push(t, kind, action, *payload):
        if 0.0 <= t <= horizon:
            events.append((t, kind, len(events), action, payload))

    for t_ev, value in exp.dc_schedule:
        push(t_ev, K_STIMULUS, "dc", value)
    for t_ev, idx, value in exp.weight_schedule:
        push(t_ev, K_STIMULUS, "weight", idx, value)
    for idx, source in exp.spike_inputs:
        if isinstance(source, (int, float)):
            times = poisson_train(float(source), horizon, derive_seed(seed, "spikes", idx))
        else:
            times = np.asarray(source, dtype=float)
        width = exp.bank.pulse_width
        for ts in times:
            ts = float(ts)
            push(ts, K_STIMULUS, "pulse_on", idx)
            push(ts + width, K_PULSE_END, "pulse_off", idx)
    if exp.disturbance is not None:
        t_d, dur, factor = exp.disturbance
        push(t_d, K_STIMULUS, "disturb", factor)
        push(t_d + dur, K_STIMULUS, "disturb", 1.0)
    if exp.sw_pin_schedule:
        for t_ev, sw in exp.sw_pin_schedule:
            push(t_ev, K_STIMULUS, "pin", sw)
    events.append((horizon, K_END, len(events), "end", ()))
    events.sort(key=lambda e: (e[0], e[1], e[2]))
    n_events = len(events)

    # --- initial state ------------------------------------------------------
    weights = list(exp.bank.weights)
    pulse_count = [0] * len(weights)
    active_sum = 0.0
    i_dc = exp.bank.i_dc
    disturb = 1.0
    pin = None

    agc = agc_mod.reset(refs, 0.0, slope_down)
    i_syn = 0.0
    if exp.start_locked:
        mean_iw = mean_weight_current(exp)
        if mean_iw > 0:
            agc.ramp_anchor_v = locked_anchor_voltage(exp, mean_iw)
            i_syn = refs.i_ref
    nstate = neuron_mod.NeuronState()

    trace = Trace(meta={
        "seed": str(seed),
        "config_digest": exp.config_digest(),
        "experiment": exp.name,
        "neuron_mode": exp.neuron_mode,
        "version": _package_version(),
    })
    for idx, w in enumerate(weights):
        trace.weight_log.append((0.0, idx, w))
    tadd = trace.add

    # locals for the hot loop
    i_ref = refs.i_ref
    eps = refs.hysteresis_eps
    hi_edge = i_ref * (1.0 + eps)
    lo_edge = i_ref * (1.0 - eps)
    i_tau = dpi_p.i_tau
    u_t, kappa, i0, vdd = dev.u_t, dev.kappa, dev.i0, dev.vdd
    eta = tol.gain_drift_eta
    eta_lock = min(eta, eps / LOCK_ETA_DIVISOR) if eps > 0 else eta
    lock_lo = i_ref * (1.0 - 3.0 * eps)
    lock_hi = i_ref * (1.0 + 3.0 * eps)
    max_segment = tol.max_segment
    si = tol.sample_interval
    rate_from_current = neuron_mod.rate_from_current
    exp_ = math.exp
    log_ = math.log

    # per-segment frozen quantities, rebound each iteration and read by the
    # helpers through their closure cells
    seg_t = 0.0
    seg_isyn = i_syn
    seg_iss = 0.0
    seg_iw = 0.0
    neuron_t = 0.0

    def isyn_at(tq):
        return seg_iss + (seg_isyn - seg_iss) * exp_(-(tq - seg_t) / tau_s)

    def record(t_row, i_syn_row):
        v = agc.v_thr(t_row)
        x = kappa * (vdd - v) / u_t
        if x > 700.0:
            x = 700.0
        elif x < -700.0:
            x = -700.0
        g = i0 * exp_(x)
        if spike_mode:
            rate = nstate.rate_estimate
        else:
            drive = i_syn_row + teacher
            rate = rate_from_current(drive, np_) if drive > 0 else 0.0
        tadd(t_row, i_syn_row, v, agc.sw, rate, seg_iw, g, i_dc)

    def advance_neuron(to_t):
        # piecewise-constant drive sub-steps through the exact i_syn curve;
        # sub-steps shrink to tau_s/2 only while the filter is in transient
        nonlocal neuron_t
        cur = neuron_t
        while cur < to_t:
            i_now = isyn_at(cur)
            scale = max(i_now, seg_iss, 1e-30)
            if abs(i_now - seg_iss) > 0.02 * scale:
                sub_end = min(to_t, cur + 0.5 * tau_s)
            else:
                sub_end = to_t
            drive = isyn_at(0.5 * (cur + sub_end)) + teacher
            if drive < 0.0:
                drive = 0.0
            cursor = cur
            while True:
                st = neuron_mod.next_spike_time(nstate, cursor, sub_end, drive, np_,
                                                rate_window=exp.rate_window)
                if st is None:
                    break
                record(st, isyn_at(st))
                cursor = st
            cur = sub_end
        neuron_t = cur

    ptr = 0

    def apply_scheduled(t_now):
        nonlocal ptr, i_dc, disturb, pin, active_sum
        while ptr < n_events and events[ptr][0] <= t_now:
            action = events[ptr][3]
            payload = events[ptr][4]
            ptr += 1
            if action == "pulse_on":
                idx = payload[0]
                if pulse_count[idx] == 0:
                    active_sum += weights[idx]
                pulse_count[idx] += 1
            elif action == "pulse_off":
                idx = payload[0]
                pulse_count[idx] -= 1
                if pulse_count[idx] == 0:
                    active_sum -= weights[idx]
            elif action == "dc":
                i_dc = payload[0]
            elif action == "weight":
                idx, value = payload
                if pulse_count[idx] > 0:
                    active_sum += value - weights[idx]
                weights[idx] = value
                trace.weight_log.append((t_now, idx, value))
            elif action == "disturb":
                disturb = payload[0]
            elif action == "pin":
                pin = payload[0]

    # t = 0: apply initial events, settle the switch, take the first sample
    apply_scheduled(0.0)
    if pin is not None:
        agc_mod.apply_sw(agc, pin, 0.0, slope_up, slope_down)
    else:
        agc_mod.apply_sw(agc, agc_mod.comparator(i_syn, agc.sw, refs), 0.0,
                         slope_up, slope_down)
    t = 0.0
    seg_iw = (i_dc + active_sum) * disturb
    record(0.0, i_syn)
    next_tick = 1
    segments = 0

    while t < horizon:
        # ---- plan one constant-drive, frozen-gain segment ------------------
        seg_iw = (i_dc + active_sum) * disturb
        x = kappa * (vdd - agc.v_thr(t)) / u_t
        if x > 700.0 or x < -700.0:
            diag.exp_saturations += 1
            x = max(-700.0, min(700.0, x))
        i_gain = i0 * exp_(x)
        if i_syn < 10.0 * i_gain:
            diag.regime_warnings += 1
        seg_t = t
        seg_isyn = i_syn
        seg_iss = seg_iw * i_gain / i_tau

        dt = events[ptr][0] - t
        if dt > max_segment:
            dt = max_segment
        slope = agc.ramp_slope
        if slope != 0.0:
            eta_eff = eta_lock if lock_lo <= i_syn <= lock_hi else eta
            drift = eta_eff * u_t / (kappa * abs(slope))
            if drift < dt:
                dt = drift
        # With a zero deadband both edges coincide and analytic crossings
        # re-fire within the landing error of the previous one, stalling
        # model time; the boundary comparator then takes over and the
        # gain-drift quantum acts as the effective deadband.
        crossing = False
        if pin is None and eps > 0.0:
            edge = lo_edge if agc.sw else hi_edge
            a = i_syn - seg_iss
            b = edge - seg_iss
            if a != 0.0 and b != 0.0 and (a > 0.0) == (b > 0.0) and abs(b) < abs(a):
                tx = tau_s * log_(a / b)
                if 0.0 < tx <= dt:
                    dt = tx
                    crossing = True
        t_next = t + dt

        # ---- in-segment samples (and neuron spikes) ------------------------
        ts = next_tick * si
        while ts < t_next:
            if ts > t:
                if spike_mode:
                    advance_neuron(ts)
                record(ts, isyn_at(ts))
            next_tick += 1
            ts = next_tick * si
        if spike_mode:
            advance_neuron(t_next)

        # ---- advance continuous state to the boundary ----------------------
        i_syn = isyn_at(t_next)
        t = t_next
        segments += 1

        # ---- discrete transitions at the boundary --------------------------
        apply_scheduled(t)
        if crossing:
            agc_mod.apply_sw(agc, 1 - agc.sw, t, slope_up, slope_down)
        elif pin is not None:
            agc_mod.apply_sw(agc, pin, t, slope_up, slope_down)
        else:
            want = agc_mod.comparator(i_syn, agc.sw, refs)
            if want != agc.sw:
                agc_mod.apply_sw(agc, want, t, slope_up, slope_down)
        agc.locked = abs(i_syn - i_ref) <= 2.0 * eps * i_ref
        seg_iw = (i_dc + active_sum) * disturb
        record(t, i_syn)

    trace.meta.update({
        "segments": str(segments),
        "toggles": str(agc.toggle_count),
        "slope_up": f"{slope_up:.12g}",
        "slope_down": f"{slope_down:.12g}",
    })
    trace.meta.update({k: str(v) for k, v in diag.as_dict().items()})
    return trace


def _package_version() -> str:
    from . import __version__

    return __version__
