"""Propagating Gaussian states through the shortcut, moment by moment.

A quadratic Hamiltonian keeps Gaussian states Gaussian, so five moments
(two means, three second moments) are the entire state.  We push a 2 mK
thermal state and a coherent state through the 20 ns opening and check the
two structural predictions of the scaling solution:

  * the position variance follows b(t)^2 exactly, even while omega^2 < 0;
  * the uncertainty product det V is a constant of the motion.

The coherent state's mean traces a spiral in phase space: the shortcut
shrinks the momentum scale while the trap phase keeps turning.
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
    fidelity,
    propagate_moments,
    scaling_phase_integral,
    shortcut_protocol,
    target_coherent,
    target_thermal,
    thermal_state,
)

AMU = 1.66053906660e-27


def main():
    pair = TrapPair(2 * math.pi * 3e6, 2 * math.pi * 1e6, 20e-9, 40 * AMU)
    b = b_minimal(pair)
    protocol = shortcut_protocol(b, pair)

    thermal = thermal_state(pair.omega0, 2e-3, pair.mass)
    traj = propagate_moments(thermal, protocol, dt=pair.tf / 4000)
    f_th = fidelity(traj.final_state, target_thermal(pair, 2e-3))
    print(f"thermal 2 mK: fidelity to the omega_f thermal target = {f_th:.9f}")

    alpha0 = 1.0 + 1.0j
    coh = coherent_state(pair.omega0, alpha0, pair.mass)
    traj_c = propagate_moments(coh, protocol, dt=pair.tf / 4000)
    g = scaling_phase_integral(b)
    f_co = fidelity(traj_c.final_state, target_coherent(pair, alpha0, g))
    print(f"coherent 1+1j: fidelity to the rotated target = {f_co:.9f} "
          f"(phase rotation {math.degrees(pair.omega0 * g):.1f} deg)")

    fig, axes = plt.subplots(1, 3, figsize=(12.5, 3.8))

    # variance tracking
    ax = axes[0]
    bt = np.asarray(b(traj.t))
    ax.plot(traj.t * 1e9, traj.moments[:, 2] / thermal.x3, lw=2.2,
            label=r"$\langle q^2\rangle(t)/\langle q^2\rangle(0)$")
    ax.plot(traj.t * 1e9, bt**2, "k--", lw=1.0, label=r"$b^2(t)$")
    ax.set_xlabel("t (ns)")
    ax.set_title("position variance rides the scaling function")
    ax.legend(frameon=False)

    # phase-space mean of the coherent state, in natural units of the start
    ax = axes[1]
    l0 = math.sqrt(1.054571817e-34 / (2 * pair.mass * pair.omega0))
    k0 = 1.054571817e-34 / (2 * l0)
    ax.plot(traj_c.moments[:, 0] / (2 * l0), traj_c.moments[:, 1] / (2 * k0),
            color="tab:orange")
    ax.plot([alpha0.real], [alpha0.imag], "o", color="tab:blue", label="start")
    ax.plot([traj_c.moments[-1, 0] / (2 * l0)],
            [traj_c.moments[-1, 1] / (2 * k0)], "s", color="tab:red",
            label="end")
    ax.set_xlabel(r"Re $\alpha$ (initial units)")
    ax.set_ylabel(r"Im $\alpha$")
    ax.set_title("coherent mean in phase space")
    ax.axis("equal")
    ax.legend(frameon=False)

    # invariant of the motion
    ax = axes[2]
    var_q = traj.moments[:, 2] - traj.moments[:, 0] ** 2
    var_p = traj.moments[:, 3] - traj.moments[:, 1] ** 2
    cov = 0.5 * traj.moments[:, 4] - traj.moments[:, 0] * traj.moments[:, 1]
    det = var_q * var_p - cov**2
    ax.plot(traj.t * 1e9, (det / det[0] - 1.0) * 1e9, color="tab:green")
    ax.set_xlabel("t (ns)")
    ax.set_ylabel(r"det$V$ drift ($\times 10^{-9}$)")
    ax.set_title("uncertainty product is conserved")

    fig.tight_layout()
    out = os.path.join(os.path.dirname(__file__), "moment_propagation.png")
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
