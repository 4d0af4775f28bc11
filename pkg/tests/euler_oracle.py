"""Brute-force fixed-step Euler co-simulation used as an independent oracle.

Deliberately dumb: one explicit-Euler step at a time for the filter, the
threshold ramp, and the charge-accumulation neuron, with the comparator
evaluated on the grid. Shares no code with the event-driven engine.
"""

import math

import numpy as np


def euler_cosim(exp, v_thr0, i_syn0, i_dc, horizon, dt=1e-5):
    """Returns (times, i_syn array, toggle times, spike times)."""
    dev = exp.system.dev
    dpi = exp.system.dpi
    tau = dpi.c_dpi * dev.u_t / (dev.kappa * dpi.i_tau)
    from homeoscale import llc_slope
    s_up = llc_slope(exp.v_g, "up", exp.system.calib, exp.system.cell) * exp.slope_scale[0]
    s_dn = llc_slope(exp.v_g, "down", exp.system.calib, exp.system.cell) * exp.slope_scale[1]
    np_ = exp.resolved_neuron_params()
    iref = exp.refs.i_ref
    eps = exp.refs.hysteresis_eps

    n = int(round(horizon / dt))
    i_syn = i_syn0
    v = v_thr0
    sw = 0
    q = 0.0
    refr = -1.0
    out = np.empty(n + 1)
    out[0] = i_syn
    toggles = []
    spikes = []
    for k in range(n):
        i_gain = dev.i0 * math.exp(dev.kappa * (dev.vdd - v) / dev.u_t)
        i_ss = i_dc * i_gain / dpi.i_tau
        i_syn += dt * (i_ss - i_syn) / tau
        v += dt * (s_up if sw else -s_dn)
        t_now = (k + 1) * dt
        if t_now >= refr:
            q += dt * max(i_syn - np_.i_leak, 0.0)
            if q >= np_.q_th:
                q = 0.0
                refr = t_now + np_.rho
                spikes.append(t_now)
        if i_syn > iref * (1.0 + eps):
            new = 1
        elif i_syn < iref * (1.0 - eps):
            new = 0
        else:
            new = sw
        if new != sw:
            toggles.append(t_now)
            sw = new
        out[k + 1] = i_syn
    times = np.arange(n + 1) * dt
    return times, out, toggles, spikes
