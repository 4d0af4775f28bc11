# Learning-interaction walkthrough: scripted potentiation under regulation.
#
# Six synapses receive independent 100 Hz Poisson trains while a teacher
# current holds the neuron near 80 Hz. At t = 70 / 105 / 140 s, batches of
# two synapses switch from the depressed to the potentiated weight; each
# switch kicks the firing rate up, and the gain-control loop pulls it back
# by rescaling the shared gain. Because only the shared gain moves, the
# ratios between individual weights are untouched - the homeostat cannot
# erase what the (scripted) learning wrote.

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

import homeoscale as hs

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

exp = hs.PROTOCOLS["fig11"]()
trace = hs.run(exp, seed=5)
metrics = hs.extract_metrics(trace, exp)

np_ = exp.resolved_neuron_params()
band = (hs.rate_from_current(exp.teacher_current + 0.95 * exp.refs.i_ref, np_),
        hs.rate_from_current(exp.teacher_current + 1.05 * exp.refs.i_ref, np_))
print(f"teacher current {exp.teacher_current * 1e9:.2f} nA holds "
      f"~80 Hz at the {exp.refs.i_ref * 1e9:.0f} nA reference")
print(f"regulated rate band: {band[0]:.1f} - {band[1]:.1f} Hz")
print(f"weight-ratio drift across the whole run: {metrics.weight_ratio_drift:.2e}")

t = trace.column("t")
rate = trace.column("rate")
events = sorted({ts for ts, _, _ in exp.weight_schedule})
for te in events:
    tail = rate[(t >= te - 5) & (t < te)]
    print(f"  mean rate in the 5 s before t={te:5.0f} s: {tail.mean():6.2f} Hz")

fig, axes = plt.subplots(2, 1, sharex=True, figsize=(9, 6),
                         gridspec_kw={"height_ratios": [3, 1]})
axes[0].plot(t, rate, lw=0.5)
axes[0].axhspan(band[0], band[1], color="tab:green", alpha=0.2, label="regulated band")
for te in events:
    axes[0].axvline(te, color="k", ls=":", lw=0.8)
axes[0].set_ylabel("firing rate (Hz)")
axes[0].legend(loc="upper right", fontsize=8)

# reconstruct the scripted weight staircase from the run's weight log
wlog = sorted(trace.weight_log)
n = len(exp.bank.weights)
for idx in range(n):
    pts_t, pts_w = [0.0], [exp.bank.weights[idx]]
    for ts, i, w in wlog:
        if i == idx:
            pts_t += [ts, ts]
            pts_w += [pts_w[-1], w]
    pts_t.append(exp.horizon)
    pts_w.append(pts_w[-1])
    axes[1].plot(pts_t, np.array(pts_w) * 1e9, lw=1.0, label=f"syn {idx}")
axes[1].set_ylabel("I_w (nA)")
axes[1].set_xlabel("time (s)")
fig.suptitle("Sequential potentiation of 2/4/6 synapses under homeostatic control")
fig.tight_layout()
path = os.path.join(OUT, "learning_interaction.png")
fig.savefig(path, dpi=120)
print(f"wrote {path}")
