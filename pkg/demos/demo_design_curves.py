"""Design curves for a fast 3 MHz -> 1 MHz trap opening.

The whole method rests on one trick: pick the width scaling b(t) first,
then read the curvature schedule off the Ermakov relation

    omega^2(t) = omega0^2 / b^4 - bddot / b.

For a 20 ns ramp the bddot/b term dominates mid-flight and the "trap"
briefly becomes a repeller (omega^2 < 0).  This script draws the schedule,
the scaling function behind it, and the adiabaticity parameter that shows
just how violently non-adiabatic the shortcut is allowed to be.

Writes design_curves.png next to this file.
"""

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sta_trapkit import (
    TrapPair,
    adiabaticity_parameter,
    anticonfinement_threshold,
    b_minimal,
    min_omega_sq,
    shortcut_protocol,
)

AMU = 1.66053906660e-27


def main():
    pair = TrapPair(2 * math.pi * 3e6, 2 * math.pi * 1e6, 20e-9, 40 * AMU)
    b = b_minimal(pair)
    protocol = shortcut_protocol(b, pair)

    t = np.linspace(0.0, pair.tf, 2001)
    w2 = np.asarray(protocol.omega_sq(t))
    eta = adiabaticity_parameter(protocol, t)

    print(f"expansion ratio gamma = {pair.gamma:.6f}")
    print(f"min omega^2 = {w2.min():.4e} rad^2/s^2 "
          f"(negative: transient anti-confinement)")

    # how slow do you have to go before the dip disappears?
    lo, hi = anticonfinement_threshold(pair)
    print(f"anti-confinement persists up to tf ~ {0.5 * (lo + hi) * 1e9:.1f} ns "
          f"(bracket {lo * 1e9:.1f} .. {hi * 1e9:.1f} ns)")

    fig, axes = plt.subplots(1, 3, figsize=(12.5, 3.8))

    ax = axes[0]
    ax.plot(t * 1e9, w2 / (2 * math.pi * 1e6) ** 2, color="tab:blue")
    ax.axhline(0.0, color="k", lw=0.6)
    ax.fill_between(t * 1e9, w2 / (2 * math.pi * 1e6) ** 2, 0.0,
                    where=w2 < 0, color="tab:red", alpha=0.3,
                    label="anti-confining")
    ax.set_xlabel("t (ns)")
    ax.set_ylabel(r"$\omega^2(t) / (2\pi\,{\rm MHz})^2$")
    ax.set_title("curvature schedule")
    ax.legend(frameon=False)

    ax = axes[1]
    ax.plot(t * 1e9, b(t), color="tab:green")
    ax.axhline(pair.gamma, color="k", lw=0.6, ls="--")
    ax.text(0.5, pair.gamma + 0.02, r"$\gamma=\sqrt{\omega_0/\omega_f}$",
            fontsize=9)
    ax.set_xlabel("t (ns)")
    ax.set_ylabel("b(t)")
    ax.set_title("width scaling (quintic ansatz)")

    ax = axes[2]
    ax.semilogy(t[1:-1] * 1e9, np.abs(eta[1:-1]), color="tab:purple")
    ax.axhline(1.0, color="k", lw=0.6, ls="--")
    ax.set_xlabel("t (ns)")
    ax.set_ylabel(r"$|\eta(t)|$")
    ax.set_title("adiabaticity parameter (>> 1 is fine here)")

    # a quick duration scan for context
    print("\n  tf (ns)   min omega^2 (rad^2/s^2)")
    for tf in (10e-9, 20e-9, 50e-9, 100e-9, 200e-9):
        p = TrapPair(pair.omega0, pair.omegaf, tf, pair.mass)
        print(f"  {tf * 1e9:7.0f}   {min_omega_sq(b_minimal(p), p):+.3e}")

    fig.tight_layout()
    out = os.path.join(os.path.dirname(__file__), "design_curves.png")
    fig.savefig(out, dpi=150)
    print(f"\nwrote {out}")


if __name__ == "__main__":
    main()
