# Ramp-slope calibration walkthrough: measuring the leakage-cell slopes.
#
# The threshold voltage is a capacitor ramp driven by an attoampere-scale
# leakage current, tuned by the gate bias V_G. With the comparator pinned,
# a run measures dV_THR/dt in each direction straight off the trace. The
# calibrated model is log-linear in V_G and passes through its anchors
# exactly, so the 1.72 V point reads back 1.5 / 0.45 uV/s bit-for-bit.

import math
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import homeoscale as hs

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

v_gs = np.linspace(1.42, 1.72, 7)
ups, downs = [], []
print(f"{'V_G (V)':>8} {'up (V/s)':>12} {'down (V/s)':>12} {'up (e-/s at 1 pF)':>18}")
for exp in hs.build_slope_sweep(list(v_gs)):
    trace = hs.run(exp, seed=0)
    s_up, s_down = hs.measure_ramp_slopes(trace, exp)
    ups.append(s_up)
    downs.append(s_down)
    electrons = hs.electrons_per_second(s_up * exp.system.cell.c_f, exp.system.dev)
    print(f"{exp.v_g:8.3f} {s_up:12.4g} {s_down:12.4g} {electrons:18.2f}")

i_up = np.array(ups) * 1e-12   # slope * C_F -> leakage current
i_dn = np.array(downs) * 1e-12
print(f"\nat V_G = 1.72 V the cell leaks "
      f"{hs.electrons_per_second(i_up[-1], hs.DeviceParams()):.1f} / "
      f"{hs.electrons_per_second(i_dn[-1], hs.DeviceParams()):.1f} electrons per second")

fig, ax = plt.subplots(figsize=(7, 5))
ax.semilogy(v_gs, np.array(ups) * 1e6, "o-", label="up slope")
ax.semilogy(v_gs, np.array(downs) * 1e6, "s-", label="down slope")
ax.set_xlabel("V_G (V)")
ax.set_ylabel("|dV_THR/dt| (uV/s)")
ax.set_title("Measured ramp slope vs gate bias (log-linear model)")
ax.legend()
fig.tight_layout()
path = os.path.join(OUT, "slope_calibration.png")
fig.savefig(path, dpi=120)
print(f"wrote {path}")
