"""Why bother with the shortcut: fidelity across four decades of duration.

Naive ramps only work when they are slow.  The shortcut is engineered to be
exact at any duration, so its infidelity curve sits at the integrator floor
from 10 ns all the way to 10 us, while linear and smooth ramps crawl back
toward 1 only in the adiabatic limit.
"""

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sta_trapkit import (
    TrapPair,
    b_minimal,
    coherent_state,
    default_dt,
    fidelity,
    linear_protocol,
    propagate_moments,
    scaling_phase_integral,
    shortcut_protocol,
    smooth_protocol,
    target_coherent,
    target_thermal,
    thermal_state,
)

AMU = 1.66053906660e-27
T0 = 2e-3
ALPHA0 = 1.0 + 1.0j


def score(pair, protocol, g_ref):
    """(thermal, coherent) fidelities against the frictionless targets."""
    # run well below the default step: pure states sit exactly on the
    # uncertainty bound, and over the 10 us ramps the guard wants slack
    dt = 0.125 * default_dt(protocol)
    th = propagate_moments(thermal_state(pair.omega0, T0, pair.mass), protocol, dt=dt)
    f_th = fidelity(th.final_state, target_thermal(pair, T0))
    co = propagate_moments(coherent_state(pair.omega0, ALPHA0, pair.mass), protocol,
                           dt=dt)
    f_co = fidelity(co.final_state, target_coherent(pair, ALPHA0, g_ref))
    return f_th, f_co


def main():
    tfs = np.logspace(math.log10(10e-9), math.log10(10e-6), 13)
    curves = {"shortcut": [], "linear": [], "smooth": []}

    for tf in tfs:
        pair = TrapPair(2 * math.pi * 3e6, 2 * math.pi * 1e6, float(tf), 40 * AMU)
        b = b_minimal(pair)
        g = scaling_phase_integral(b)
        curves["shortcut"].append(score(pair, shortcut_protocol(b, pair), g))
        curves["linear"].append(score(pair, linear_protocol(pair), g))
        curves["smooth"].append(score(pair, smooth_protocol(pair), g))

    print(f"{'tf':>10}  {'shortcut':>10}  {'linear':>10}  {'smooth':>10}   (thermal)")
    for i, tf in enumerate(tfs):
        print(f"{tf * 1e9:8.1f}ns  "
              + "  ".join(f"{curves[k][i][0]:10.6f}"
                          for k in ("shortcut", "linear", "smooth")))

    fig, axes = plt.subplots(1, 2, figsize=(10.5, 4.0), sharey=True)
    styles = {"shortcut": ("tab:blue", "o"), "linear": ("tab:orange", "s"),
              "smooth": ("tab:green", "^")}
    for col, (title, idx) in enumerate((("thermal 2 mK", 0),
                                        ("coherent 1+1j", 1))):
        ax = axes[col]
        for kind, (color, marker) in styles.items():
            infid = [max(1.0 - f[idx], 1e-12) for f in curves[kind]]
            ax.loglog(tfs * 1e9, infid, marker=marker, ms=4, color=color,
                      label=kind)
        ax.axhline(1e-3, color="k", lw=0.6, ls="--")
        ax.text(12, 1.4e-3, "0.999 threshold", fontsize=8)
        ax.set_xlabel("ramp duration (ns)")
        ax.set_title(title)
        ax.grid(alpha=0.25, which="both")
    axes[0].set_ylabel("infidelity 1 - F")
    axes[0].legend(frameon=False)

    fig.tight_layout()
    out = os.path.join(os.path.dirname(__file__), "fidelity_sweep.png")
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
