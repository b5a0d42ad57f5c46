"""Classical reality check: the shortcut inside a driven Paul trap.

The moment propagation treats omega^2(t) as god-given.  A real linear trap
makes its radial confinement out of a 100 MHz RF drive, so switching the
drive off, playing the 20 ns DC shortcut, and switching the RF back on is
the honest experiment.  We integrate the full driven motion (velocity
Verlet, micromotion and all) for an ion orbiting on an ellipse, and compare
the shortcut against a plain linear ramp of the same duration:

  * the shortcut hands the ion over with its adiabatic invariant E/omega
    intact and the orbit ellipse still axis-aligned;
  * the linear ramp leaves the ion trapped but hot, on a tilted ellipse.
"""

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sta_trapkit import (
    IonState,
    TrapPair,
    b_minimal,
    ellipse_fit,
    linear_protocol,
    secular_invariant,
    shortcut_protocol,
    simulate,
    standard_sequence,
)
from sta_trapkit.gaussian import KB

AMU = 1.66053906660e-27
RF = 2 * math.pi * 100e6
WZ = 2 * math.pi * 100e3


def run(pair, protocol, ic):
    seq = standard_sequence(pair, protocol, RF, WZ,
                            lead_periods=6.0, trail_duration=4e-6)
    traj = simulate(seq, ic)
    edges = seq.boundaries
    t_rf = 2 * math.pi / RF
    e0 = secular_invariant(traj, (0.0, float(edges[1])), pair.omega0, rf_period=t_rf)
    e1 = secular_invariant(traj, (float(edges[2]), float(edges[3])), pair.omegaf,
                           rf_period=t_rf)
    sl = traj.phase_slice(2)
    fit = ellipse_fit(traj.r[sl, 0], traj.r[sl, 1])
    return traj, edges, e1 / e0, fit


def main():
    pair = TrapPair(2 * math.pi * 3e6, 2 * math.pi * 1e6, 20e-9, 40 * AMU)
    amp = math.sqrt(KB * 2e-3 / (pair.mass * pair.omega0**2))
    # thermal-scale orbit: displaced in x, kicked in y (axis ratio 0.8)
    ic = IonState(r=np.array([amp, 0.0, 0.0]),
                  v=np.array([0.0, 0.8 * amp * pair.omega0, 0.0]))

    runs = {}
    for name, protocol in (("shortcut", shortcut_protocol(b_minimal(pair), pair)),
                           ("linear ramp", linear_protocol(pair))):
        traj, edges, ratio, fit = run(pair, protocol, ic)
        runs[name] = (traj, edges, ratio, fit)
        print(f"{name:12s}: invariant ratio {ratio:.4f}, "
              f"trail ellipse tilt {fit.tilt_deg:+.2f} deg, "
              f"axis ratio {fit.axis_ratio:.3f}")

    fig = plt.figure(figsize=(12.5, 4.0))
    ax = fig.add_subplot(1, 3, 1)
    traj, edges, _, _ = runs["shortcut"]
    ax.plot(traj.t * 1e6, traj.r[:, 0] * 1e9, lw=0.5, color="tab:blue")
    for e in edges[1:3]:
        ax.axvline(e * 1e6, color="k", lw=0.6, ls=":")
    ax.set_xlabel("t (us)")
    ax.set_ylabel("x (nm)")
    ax.set_title("shortcut handoff, x motion")

    # zoom on the switch region: micromotion ripple riding the secular swing
    ax = fig.add_subplot(1, 3, 2)
    t0 = edges[1] - 0.15e-6
    t1 = edges[2] + 0.15e-6
    m = (traj.t >= t0) & (traj.t <= t1)
    ax.plot(traj.t[m] * 1e6, traj.r[m, 0] * 1e9, lw=0.8, color="tab:blue")
    ax.axvspan(edges[1] * 1e6, edges[2] * 1e6, color="tab:red", alpha=0.2)
    ax.set_xlabel("t (us)")
    ax.set_title("20 ns DC window (shaded)")

    ax = fig.add_subplot(1, 3, 3)
    for name, color in (("shortcut", "tab:blue"), ("linear ramp", "tab:orange")):
        traj, edges, ratio, fit = runs[name]
        sl = traj.phase_slice(2)
        ax.plot(traj.r[sl, 0] * 1e9, traj.r[sl, 1] * 1e9, lw=0.4, color=color,
                label=f"{name} (tilt {fit.tilt_deg:+.1f} deg)")
    ax.set_xlabel("x (nm)")
    ax.set_ylabel("y (nm)")
    ax.axis("equal")
    ax.set_title("orbit after the ramp")
    ax.legend(frameon=False, fontsize=8)

    fig.tight_layout()
    out = os.path.join(os.path.dirname(__file__), "micromotion.png")
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
