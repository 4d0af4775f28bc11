"""First-order log-domain synaptic filter with weight-current superposition.

The filter obeys  tau_s * dI_syn/dt + I_syn = I_w * I_gain / I_tau  under
constant drive, so the state can be advanced in closed form between drive
changes and threshold crossings can be located analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .device import DeviceParams
from .errors import DomainError, ValidationError


@dataclass(frozen=True)
class DpiParams:
    """Filter capacitor, time-constant bias current, and device constants."""

    c_dpi: float = 1e-12
    i_tau: float = 10e-12
    dev: DeviceParams = DeviceParams()

    def __post_init__(self):
        if self.c_dpi <= 0:
            raise ValidationError("c_dpi must be positive")
        if self.i_tau <= 0:
            raise ValidationError("i_tau must be positive")


@dataclass
class SynapseBank:
    """Per-synapse weight currents, the pulse window, and the DC test branch."""

    weights: list
    pulse_width: float = 1e-3
    i_dc: float = 0.0

    def __post_init__(self):
        self.weights = [float(w) for w in self.weights]
        if any(w < 0 for w in self.weights):
            raise ValidationError("weight currents must be non-negative")
        if self.pulse_width <= 0:
            raise ValidationError("pulse_width must be positive")
        if self.i_dc < 0:
            raise ValidationError("i_dc must be non-negative")


@dataclass
class DpiState:
    """Filter output current and its timestamp."""

    i_syn: float = 0.0
    t: float = 0.0


def dpi_time_constant(p: DpiParams) -> float:
    """tau_s = C_DPI * U_T / (kappa * I_tau)."""
    return p.c_dpi * p.dev.u_t / (p.dev.kappa * p.i_tau)


def total_weight_current(bank: SynapseBank, active_pulses) -> float:
    """DC branch plus the weights of synapses with an active input pulse.

    A synapse contributes while at least one pulse window (pulse_width
    after each input spike) is open; overlapping windows do not stack.
    """
    total = bank.i_dc
    n = len(bank.weights)
    for i in active_pulses:
        if not 0 <= i < n:
            raise ValidationError(f"synapse index {i} out of range (bank has {n})")
        total += bank.weights[i]
    return total


def dpi_steady_state(i_w: float, i_gain: float, p: DpiParams) -> float:
    """Fixed point of the filter under constant drive: I_w * I_gain / I_tau."""
    return i_w * i_gain / p.i_tau


def dpi_evolve(s: DpiState, dt: float, i_w: float, i_gain: float, p: DpiParams) -> DpiState:
    """Exact exponential update over a constant-drive interval of length dt.

    The caller guarantees the drive is constant on [t, t+dt]; the engine
    splits time at every stimulus and comparator edge to ensure this.
    """
    if dt < 0:
        raise DomainError("dt must be non-negative")
    if dt == 0.0:
        return DpiState(i_syn=s.i_syn, t=s.t)
    i_ss = dpi_steady_state(i_w, i_gain, p)
    tau = dpi_time_constant(p)
    i_new = i_ss + (s.i_syn - i_ss) * math.exp(-dt / tau)
    return DpiState(i_syn=i_new, t=s.t + dt)


def dpi_crossing_time(s: DpiState, i_target: float, i_w: float, i_gain: float,
                      p: DpiParams):
    """Time until the filter output reaches i_target, or None if unreachable.

    Inverts the exponential solution; the target is reachable only when it
    lies between the current value and the steady state (the steady state
    itself is approached asymptotically, never crossed).
    """
    if s.i_syn == i_target:
        return 0.0
    i_ss = dpi_steady_state(i_w, i_gain, p)
    a = s.i_syn - i_ss
    b = i_target - i_ss
    # reachable iff target strictly between current value and steady state
    if a == 0.0 or b == 0.0 or (a > 0) != (b > 0) or abs(b) > abs(a):
        return None
    tau = dpi_time_constant(p)
    return tau * math.log(a / b)


def v_syn_from_current(i_syn: float, dev: DeviceParams) -> float:
    """Derived output-node voltage: vdd - (u_t/kappa) * ln(i_syn / i0).

    Uses the global i0 prefactor; purely an observable, never fed back.
    """
    if i_syn <= 0:
        raise DomainError("i_syn must be positive to map to a voltage")
    return dev.vdd - (dev.u_t / dev.kappa) * math.log(i_syn / dev.i0)
