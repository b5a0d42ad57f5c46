"""Buying slew-rate headroom with extra ansatz coefficients.

The minimal quintic design is unique, so its peak |d(omega^2)/dt| is
whatever it is.  Appending one free coefficient a6 to the scaling
polynomial (and re-solving the boundary conditions for a0..a5) leaves the
physics identical but opens one knob; gradient descent on a smoothed
max-slew objective finds the gentlest member of the family.

One coefficient already cuts the peak slew to ~0.75 of the baseline; a
second buys a little more.  No schedule can beat the mean-value bound
(omega0^2 - omegaf^2)/tf, shown as the dashed floor.
"""

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sta_trapkit import (
    SlewObjective,
    TrapPair,
    b_extended,
    b_minimal,
    optimize_extra_coeffs,
    shortcut_protocol,
    slew_lower_bound,
)

AMU = 1.66053906660e-27


def slew_curve(protocol, n=4001):
    t = np.linspace(0.0, protocol.tf, n)
    return t, np.abs(np.asarray(protocol.omega_sq_dt(t)))


def main():
    pair = TrapPair(2 * math.pi * 3e6, 2 * math.pi * 1e6, 20e-9, 40 * AMU)
    bound = slew_lower_bound(pair)
    base = shortcut_protocol(b_minimal(pair), pair)

    results = {}
    for n_extra in (1, 2):
        res = optimize_extra_coeffs(SlewObjective(pair), n_extra=n_extra)
        results[n_extra] = res
        coeffs = ", ".join(f"a{k}={v:+.4f}" for k, v in res.coefficients.items())
        print(f"n_extra={n_extra}: ratio={res.ratio:.4f}  ({coeffs})  "
              f"iterations={res.iterations}")
    print(f"mean-value floor / baseline = {bound / results[1].baseline_slew:.4f}")

    opt1 = shortcut_protocol(b_extended(pair, results[1].coefficients), pair)
    opt2 = shortcut_protocol(b_extended(pair, results[2].coefficients), pair)

    fig, axes = plt.subplots(1, 2, figsize=(10.5, 4.0))

    ax = axes[0]
    for prot, label, color in ((base, "minimal", "tab:gray"),
                               (opt1, "a6 optimized", "tab:blue"),
                               (opt2, "a6,a7 optimized", "tab:red")):
        t = np.linspace(0.0, pair.tf, 2001)
        ax.plot(t * 1e9, np.asarray(prot.omega_sq(t)) / (2 * math.pi * 1e6) ** 2,
                color=color, label=label)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("t (ns)")
    ax.set_ylabel(r"$\omega^2 / (2\pi\,{\rm MHz})^2$")
    ax.set_title("schedules stay interchangeable")
    ax.legend(frameon=False, fontsize=8)

    ax = axes[1]
    for prot, label, color in ((base, "minimal", "tab:gray"),
                               (opt1, "a6 optimized", "tab:blue"),
                               (opt2, "a6,a7 optimized", "tab:red")):
        t, sl = slew_curve(prot)
        ax.plot(t * 1e9, sl, color=color, label=label)
    ax.axhline(bound, color="k", lw=0.8, ls="--", label="mean-value bound")
    ax.set_xlabel("t (ns)")
    ax.set_ylabel(r"$|\partial_t \omega^2|$ (rad$^2$ s$^{-3}$)")
    ax.set_title("peak slew drops, floor stays")
    ax.legend(frameon=False, fontsize=8)

    fig.tight_layout()
    out = os.path.join(os.path.dirname(__file__), "slew_optimization.png")
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
