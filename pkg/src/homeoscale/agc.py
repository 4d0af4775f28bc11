"""Bang-bang automatic gain control: comparator, switch logic, exact ramp.

The threshold voltage is represented as an exact affine ramp (anchor
value plus signed slope) instead of an accumulated integral, so uV/s
slopes held over 100 ks do not drown in floating-point accumulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .device import DeviceParams
from .errors import DomainError, ValidationError


@dataclass(frozen=True)
class AgcRefs:
    """Reference current, reference-voltage ladder, and comparator deadband."""

    i_ref: float = 20e-9
    v_ref_h: float = 1.384
    v_ref_m: float = 1.382
    v_ref_l: float = 1.380
    hysteresis_eps: float = 1e-3

    def __post_init__(self):
        if self.i_ref <= 0:
            raise ValidationError("i_ref must be positive")
        if not self.v_ref_l < self.v_ref_m < self.v_ref_h:
            raise ValidationError("references must satisfy v_ref_l < v_ref_m < v_ref_h")
        if not 0 <= self.hysteresis_eps < 1:
            raise ValidationError("hysteresis_eps must be in [0, 1)")


@dataclass
class AgcState:
    """Comparator output and the affine threshold-voltage ramp.

    v_thr(t) = ramp_anchor_v + ramp_slope * (t - ramp_anchor_t); the slope
    sign follows sw (+ rising when sw = 1, - falling when sw = 0).
    """

    sw: int
    ramp_anchor_t: float
    ramp_anchor_v: float
    ramp_slope: float
    toggle_count: int = 0
    locked: bool = False

    def v_thr(self, t: float) -> float:
        return self.ramp_anchor_v + self.ramp_slope * (t - self.ramp_anchor_t)


def comparator(i_syn: float, prev_sw: int, refs: AgcRefs) -> int:
    """Hysteretic comparison of the filter output against the reference.

    Above i_ref*(1+eps) -> 1 (down-regulate), below i_ref*(1-eps) -> 0,
    inside the deadband the previous output holds.
    """
    if i_syn > refs.i_ref * (1.0 + refs.hysteresis_eps):
        return 1
    if i_syn < refs.i_ref * (1.0 - refs.hysteresis_eps):
        return 0
    return prev_sw


def select_vds(sw: int, refs: AgcRefs) -> float:
    """Drain-source drop selected by the switch state.

    sw = 1 routes the low reference (positive drop, capacitor discharges,
    threshold rises); sw = 0 routes the high reference (negative drop,
    threshold falls).
    """
    if sw:
        return refs.v_ref_m - refs.v_ref_l
    return refs.v_ref_m - refs.v_ref_h


def apply_sw(state: AgcState, new_sw: int, t: float, slope_up: float,
             slope_down: float) -> AgcState:
    """Apply a comparator decision at time t, re-anchoring the ramp on a toggle.

    The anchor is re-evaluated at (t, v_thr(t)) so the ramp is continuous
    across toggles. An unchanged decision leaves the state untouched.
    """
    if t < state.ramp_anchor_t:
        raise ValidationError(f"time {t:g} precedes ramp anchor {state.ramp_anchor_t:g}")
    if new_sw == state.sw:
        return state
    state.ramp_anchor_v = state.v_thr(t)
    state.ramp_anchor_t = t
    state.sw = new_sw
    state.ramp_slope = slope_up if new_sw else -slope_down
    state.toggle_count += 1
    return state


def reset(refs: AgcRefs, t: float, slope_down: float) -> AgcState:
    """Initial condition: threshold anchored at v_ref_m, switch low.

    The switch-low convention makes the initial ramp slope negative, so
    the loop starts by raising the gain.
    """
    return AgcState(sw=0, ramp_anchor_t=t, ramp_anchor_v=refs.v_ref_m,
                    ramp_slope=-abs(slope_down))


def predict_recovery_time(step_ratio: float, slope: float, dev: DeviceParams) -> float:
    """Time for the loop to rescale the gain by 1/step_ratio at a given slope.

    The threshold must travel (u_t/kappa)*|ln(step_ratio)|; valid when the
    filter time constant is much shorter than the result.
    """
    if step_ratio <= 0:
        raise DomainError("step_ratio must be positive")
    if slope <= 0:
        raise DomainError("slope must be positive")
    return (dev.u_t / dev.kappa) * abs(math.log(step_ratio)) / slope


def slope_for_recovery(step_ratio: float, target_time: float, dev: DeviceParams) -> float:
    """Ramp slope that recovers a given drive step in target_time seconds."""
    if target_time <= 0:
        raise DomainError("target_time must be positive")
    if step_ratio <= 0 or step_ratio == 1.0:
        raise DomainError("step_ratio must be positive and != 1")
    return (dev.u_t / dev.kappa) * abs(math.log(step_ratio)) / target_time


def chatter_period(slope_up: float, slope_down: float, refs: AgcRefs,
                   dev: DeviceParams) -> float:
    """Limit-cycle period in the locked region under the quasi-static model.

    The threshold sweeps dV = (u_t/kappa)*ln((1+eps)/(1-eps)) once up and
    once down per cycle. A zero deadband has no finite period.
    """
    if refs.hysteresis_eps <= 0:
        raise DomainError("chatter period undefined for zero hysteresis")
    if slope_up <= 0 or slope_down <= 0:
        raise DomainError("slopes must be positive")
    eps = refs.hysteresis_eps
    dv = (dev.u_t / dev.kappa) * math.log((1.0 + eps) / (1.0 - eps))
    return dv * (1.0 / slope_up + 1.0 / slope_down)
