"""Transistor-law and leakage-cell behavioral models.

Everything here is a pure function of its inputs: the subthreshold
exponential gain law, the calibrated charge/discharge slope of the
threshold-voltage ramp capacitor, and the electron-rate bookkeeping used
to report attoampere-scale leakage currents.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field

from .errors import DomainError, ValidationError

# Electron charge (C), fixed.
Q_E = 1.602176634e-19

# exp() argument clamp; saturation is counted in Diagnostics, never silent.
EXP_CLAMP = 700.0

# Extrapolation guard beyond the calibrated gate-bias range (V).
VG_GUARD = 0.2

# Estimated total gate-leakage ceiling for the low-leakage cell (A); the
# default parasitic currents are zero, this bounds sane overrides.
GATE_LEAKAGE_CEILING = 1e-19


@dataclass
class Diagnostics:
    """Mutable warning counters owned by one simulation run."""

    exp_saturations: int = 0
    regime_warnings: int = 0  # segments where I_syn < 10 * I_gain

    def as_dict(self) -> dict:
        return {
            "diagnostics.exp_saturations": self.exp_saturations,
            "diagnostics.regime_warnings": self.regime_warnings,
        }


@dataclass(frozen=True)
class DeviceParams:
    """Global physical constants and subthreshold transistor-law parameters.

    u_t: thermal voltage (V), kappa: subthreshold slope coefficient,
    i0: subthreshold leakage prefactor (A), vdd: supply voltage (V),
    q_e: electron charge (C, fixed).
    """

    u_t: float = 25.8e-3
    kappa: float = 0.7
    i0: float = 1e-16
    vdd: float = 1.8
    q_e: float = Q_E

    def __post_init__(self):
        if self.u_t <= 0:
            raise ValidationError("u_t must be positive")
        if not 0 < self.kappa <= 1:
            raise ValidationError("kappa must be in (0, 1]")
        if self.i0 <= 0:
            raise ValidationError("i0 must be positive")
        if self.vdd <= 0:
            raise ValidationError("vdd must be positive")


@dataclass(frozen=True)
class LeakageCellParams:
    """Ramp-integrator cell: capacitor, gate bias, and reference ladder.

    The parasitic currents lump the drain-side diffusion and gate leakage
    terms into one additive per-direction contribution; defaults are zero.
    """

    c_f: float = 1e-12
    v_g: float = 1.42
    v_ref_h: float = 1.384
    v_ref_m: float = 1.382
    v_ref_l: float = 1.380
    i_parasitic_up: float = 0.0
    i_parasitic_down: float = 0.0

    def __post_init__(self):
        if self.c_f <= 0:
            raise ValidationError("c_f must be positive")
        if not self.v_ref_l < self.v_ref_m < self.v_ref_h:
            raise ValidationError("references must satisfy v_ref_l < v_ref_m < v_ref_h")
        if self.i_parasitic_up < 0 or self.i_parasitic_down < 0:
            raise ValidationError("parasitic currents must be non-negative")


@dataclass(frozen=True)
class LeakageCalibration:
    """Anchor-exact, piecewise log-linear slope model vs gate bias.

    anchors: ordered (v_g, slope_up, slope_down) triples, strictly
    ascending in v_g, slopes positive and non-increasing (the measured
    slopes decay exponentially as the gate bias rises).
    """

    anchors: tuple = ()
    # Derived interpolation tables (filled by fit_leakage_calibration).
    _vg: tuple = field(default=(), repr=False)
    _ln_up: tuple = field(default=(), repr=False)
    _ln_down: tuple = field(default=(), repr=False)

    @property
    def v_g_min(self) -> float:
        return self._vg[0]

    @property
    def v_g_max(self) -> float:
        return self._vg[-1]


def fit_leakage_calibration(anchors) -> LeakageCalibration:
    """Package measured (v_g, slope_up, slope_down) triples into a model.

    The model passes through every anchor exactly and interpolates
    log(slope) linearly in v_g between them, so tabulated slopes are
    reproduced bit-for-bit.
    """
    pts = sorted((float(v), float(su), float(sd)) for v, su, sd in anchors)
    if len(pts) < 2:
        raise ValidationError("need at least 2 calibration anchors")
    vgs = [p[0] for p in pts]
    if len(set(vgs)) != len(vgs):
        raise ValidationError("calibration anchors must have distinct v_g values")
    for _, su, sd in pts:
        if su <= 0 or sd <= 0:
            raise ValidationError("calibration slopes must be positive")
    for (_, su0, sd0), (_, su1, sd1) in zip(pts, pts[1:]):
        if su1 > su0 or sd1 > sd0:
            raise ValidationError("slopes must be non-increasing in v_g")
    return LeakageCalibration(
        anchors=tuple(pts),
        _vg=tuple(vgs),
        _ln_up=tuple(math.log(p[1]) for p in pts),
        _ln_down=tuple(math.log(p[2]) for p in pts),
    )


def default_leakage_calibration(dev: DeviceParams) -> LeakageCalibration:
    """Two-anchor default: a 60 s adaptation timescale at 1.42 V plus the
    measured 1.5 / 0.45 uV/s asymmetric pair at 1.72 V.

    The 1.42 V slope is the value implied by a 60 s recovery from a 2x
    drive step: (u_t/kappa) * ln(2) / 60.
    """
    s60 = (dev.u_t / dev.kappa) * math.log(2.0) / 60.0
    return fit_leakage_calibration([(1.42, s60, s60), (1.72, 1.5e-6, 0.45e-6)])


def gain_current(v_thr: float, dev: DeviceParams, diagnostics: Diagnostics | None = None) -> float:
    """Shared scaling current of the synapse bank: i0 * exp(kappa*(vdd - v_thr)/u_t).

    Strictly decreasing in v_thr. The exponent is clamped to +-700 to
    avoid overflow; clamping increments ``diagnostics.exp_saturations``.
    """
    x = dev.kappa * (dev.vdd - v_thr) / dev.u_t
    if x > EXP_CLAMP or x < -EXP_CLAMP:
        if diagnostics is not None:
            diagnostics.exp_saturations += 1
        x = max(-EXP_CLAMP, min(EXP_CLAMP, x))
    return dev.i0 * math.exp(x)


def _interp_ln_slope(v_g: float, vgs, lns) -> float:
    # Nearest-segment log-linear interpolation; extrapolates on end segments.
    i = bisect_right(vgs, v_g) - 1
    i = max(0, min(i, len(vgs) - 2))
    v0, v1 = vgs[i], vgs[i + 1]
    f = (v_g - v0) / (v1 - v0)
    return lns[i] + f * (lns[i + 1] - lns[i])


def llc_slope(v_g: float, direction: str, calib: LeakageCalibration,
              cell: LeakageCellParams) -> float:
    """Magnitude of dV_THR/dt (V/s) for one ramp direction at gate bias v_g.

    The calibrated part is (|I_DS|/C_F); the per-direction parasitic
    current adds I_parasitic/C_F on top. Valid for v_g within the anchor
    range widened by VG_GUARD on each side.
    """
    lo = calib.v_g_min - VG_GUARD
    hi = calib.v_g_max + VG_GUARD
    if not lo <= v_g <= hi:
        raise DomainError(f"v_g={v_g:g} V outside calibrated range [{lo:g}, {hi:g}] V")
    if direction == "up":
        col, lns, par = 1, calib._ln_up, cell.i_parasitic_up
    elif direction == "down":
        col, lns, par = 2, calib._ln_down, cell.i_parasitic_down
    else:
        raise DomainError(f"direction must be 'up' or 'down', got {direction!r}")
    # anchors reproduce bit-for-bit, bypassing the exp/log round trip
    if v_g in calib._vg:
        base = calib.anchors[calib._vg.index(v_g)][col]
    else:
        base = math.exp(_interp_ln_slope(v_g, calib._vg, lns))
    return base + par / cell.c_f


def v_g_for_slope(slope: float, direction: str, calib: LeakageCalibration) -> float:
    """Invert the calibration: gate bias whose ramp slope equals ``slope``.

    Uses the nearest log-linear segment, so it extrapolates linearly in
    log(slope) beyond the anchors; no guard is applied here.
    """
    if slope <= 0:
        raise DomainError("slope must be positive")
    lns = calib._ln_up if direction == "up" else calib._ln_down
    vgs = calib._vg
    target = math.log(slope)
    # slopes are non-increasing in v_g, so ln arrays are too
    i = 0
    for j in range(len(lns) - 1):
        if lns[j] >= target >= lns[j + 1]:
            i = j
            break
    else:
        i = 0 if target > lns[0] else len(lns) - 2
    f = (target - lns[i]) / (lns[i + 1] - lns[i])
    return vgs[i] + f * (vgs[i + 1] - vgs[i])


def electrons_per_second(i: float, dev: DeviceParams) -> float:
    """Electron count per second carried by a current i >= 0."""
    if i < 0:
        raise DomainError("current must be non-negative")
    return i / dev.q_e
