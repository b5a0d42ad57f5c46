"""Integration of trap-mode dynamics under a curvature schedule.

Two fixed-step RK4 solvers live here.  solve_ermakov evolves the scaling
function through

    b'' = omega0^2 / b^3 - omega^2(t) b

to check self-consistency of a designed schedule, or to see what a reference
ramp does to the mode width; the inverse-square phase integral

    g(t) = int_0^t dt' / b^2

rides along as an extra state component.  propagate_moments evolves the five
moments of a Gaussian state, which close under any quadratic Hamiltonian:

    X1' = X2/m,  X2' = -m w2 X1,  X3' = X5/m,  X4' = -m w2 X5,
    X5' = 2 X4/m - 2 m w2 X3.

Internally the moment system runs in scaled variables (q in units of
l0 = sqrt(hbar/2 m w_ref), p in units of k0 = sqrt(m hbar w_ref/2)) so the
state vector stays O(1); the stored trajectory is SI.

Both solvers precompute the schedule on a half-step grid, so the inner loop
makes no schedule calls; steps are classic RK4 with the midpoint samples
shared by k2 and k3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, simpson

from .errors import IntegrationAccuracyError, TrajectoryCollapseError
from .gaussian import HBAR, GaussianState, ground_length, ground_momentum
from .protocol import Protocol, ScalingFunction, TrapPair

# step policy: resolve the fastest implied period 200x, never fewer than
# 2000 steps across the schedule
_PERIOD_DIV = 200
_MIN_STEPS = 2000

# runtime guards on the propagated covariance, in units of (hbar/2)^2
_HEISENBERG_TOL = 1e-9
_DETV_DRIFT_GUARD = 1e-6


def default_dt(protocol: Protocol) -> float:
    """min(T_min/200, tf/2000) with T_min the period of the largest |omega^2|."""
    _, w2 = protocol.sample(4001)
    wmax = math.sqrt(float(np.max(np.abs(w2))))
    if wmax == 0.0:
        return protocol.tf / _MIN_STEPS
    return min(2.0 * math.pi / wmax / _PERIOD_DIV, protocol.tf / _MIN_STEPS)


def _grid(protocol: Protocol, dt: float | None):
    """Number of steps and the schedule on the half-step grid."""
    if dt is None:
        dt = default_dt(protocol)
    n = int(np.ceil(protocol.tf / dt))
    th = np.linspace(0.0, protocol.tf, 2 * n + 1)
    return n, np.asarray(protocol.omega_sq(th), dtype=float)


def rk4_step(y, f, t, dt):
    """One classic Runge-Kutta step for y' = f(t, y)."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True)
class ErmakovTrajectory:
    """Scaling function, its rate and the running phase integral on a grid."""

    t: np.ndarray
    b: np.ndarray
    bdot: np.ndarray
    g: np.ndarray

    @property
    def final(self) -> tuple[float, float]:
        return float(self.b[-1]), float(self.bdot[-1])


def solve_ermakov(protocol: Protocol, pair: TrapPair, dt: float | None = None) -> ErmakovTrajectory:
    """Integrate the Ermakov equation under a schedule from b=1, bdot=0.

    Raises TrajectoryCollapseError if b reaches zero or below, where the
    omega0^2/b^3 term blows up and the scaling picture loses meaning (an
    anti-confining segment held too long does this).
    """
    n, w2 = _grid(protocol, dt)
    w0sq = pair.omega0**2
    h_t = protocol.tf / n
    h = 0.5 * h_t
    b = np.empty(n + 1)
    bd = np.empty(n + 1)
    g = np.empty(n + 1)
    x, v, ph = 1.0, 0.0, 0.0
    b[0], bd[0], g[0] = x, v, ph
    for i in range(n):
        wa = w2[2 * i]
        wm = w2[2 * i + 1]
        wb = w2[2 * i + 2]
        if x <= 0.0:
            raise TrajectoryCollapseError(f"b reached {x:.3e} at step {i}")
        a1 = w0sq / x**3 - wa * x
        p1 = 1.0 / x**2
        x2 = x + h * v
        v2 = v + h * a1
        if x2 <= 0.0:
            raise TrajectoryCollapseError(f"b reached {x2:.3e} at step {i}")
        a2 = w0sq / x2**3 - wm * x2
        p2 = 1.0 / x2**2
        x3 = x + h * v2
        v3 = v + h * a2
        if x3 <= 0.0:
            raise TrajectoryCollapseError(f"b reached {x3:.3e} at step {i}")
        a3 = w0sq / x3**3 - wm * x3
        p3 = 1.0 / x3**2
        x4 = x + h_t * v3
        v4 = v + h_t * a3
        if x4 <= 0.0:
            raise TrajectoryCollapseError(f"b reached {x4:.3e} at step {i}")
        a4 = w0sq / x4**3 - wb * x4
        p4 = 1.0 / x4**2
        x += (h_t / 6.0) * (v + 2.0 * v2 + 2.0 * v3 + v4)
        v += (h_t / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        ph += (h_t / 6.0) * (p1 + 2.0 * p2 + 2.0 * p3 + p4)
        b[i + 1], bd[i + 1], g[i + 1] = x, v, ph
    if b[-1] <= 0.0:
        raise TrajectoryCollapseError("b nonpositive at the final time")
    t = np.linspace(0.0, protocol.tf, n + 1)
    return ErmakovTrajectory(t=t, b=b, bdot=bd, g=g)


def phase_integral(traj: ErmakovTrajectory) -> float:
    """g(tf) by Simpson quadrature of 1/b^2 on the trajectory grid.

    Deliberately independent of the g accumulated inside the RK4 loop, so
    the two values cross-check each other.
    """
    return float(simpson(1.0 / traj.b**2, x=traj.t))


def scaling_phase_integral(b: ScalingFunction) -> float:
    """g(tf) of a designed polynomial scaling function by adaptive quadrature.

    This fixes the phase of the coherent-state target: a frictionless
    schedule maps alpha to alpha exp(-i g omega0).
    """
    val, _ = quad(lambda s: 1.0 / b.reduced(s) ** 2, 0.0, 1.0,
                  epsabs=1e-16, epsrel=1e-13)
    return val * b.tf


@dataclass(frozen=True)
class MomentTrajectory:
    """The five SI moments on a uniform grid; rows are (X1..X5)."""

    t: np.ndarray
    moments: np.ndarray
    mass: float

    def state_at(self, i: int) -> GaussianState:
        return GaussianState.from_moments(self.moments[i], self.mass)

    @property
    def final_state(self) -> GaussianState:
        return self.state_at(-1)

    @property
    def var_q(self) -> np.ndarray:
        return self.moments[:, 2] - self.moments[:, 0] ** 2

    @property
    def var_p(self) -> np.ndarray:
        return self.moments[:, 3] - self.moments[:, 1] ** 2

    @property
    def det_v(self) -> np.ndarray:
        cov = 0.5 * self.moments[:, 4] - self.moments[:, 0] * self.moments[:, 1]
        return self.var_q * self.var_p - cov**2


def propagate_moments(state0: GaussianState, protocol: Protocol,
                      dt: float | None = None) -> MomentTrajectory:
    """Evolve a Gaussian state's moments under a curvature schedule.

    The quadratic Hamiltonian preserves Gaussianity exactly, so the five
    moments are the whole state.  After the run, every grid point must
    satisfy positive variances and the uncertainty bound
    Var(q)Var(p) - Cov^2 >= hbar^2/4 (1 - 1e-9), and the determinant may
    not have drifted by more than 1e-6 relative (it is conserved exactly
    by the continuous dynamics); violations raise IntegrationAccuracyError
    with a suggestion to reduce dt.
    """
    n, w2 = _grid(protocol, dt)
    w2_0 = w2[0]
    omega_ref = math.sqrt(w2_0) if w2_0 > 0.0 else math.sqrt(float(np.max(np.abs(w2))))
    if omega_ref == 0.0:
        raise ValueError("schedule is identically zero; no reference frequency")
    l0 = ground_length(omega_ref, state0.mass)
    k0 = ground_momentum(omega_ref, state0.mass)
    scale = np.array([l0, k0, l0 * l0, k0 * k0, l0 * k0])
    w = w2 / omega_ref
    h_t = protocol.tf / n
    h = 0.5 * h_t
    out = np.empty((n + 1, 5))
    x1, x2, x3, x4, x5 = (float(v) for v in state0.moments / scale)
    out[0] = (x1, x2, x3, x4, x5)
    for i in range(n):
        wa = w[2 * i]
        wm = w[2 * i + 1]
        wb = w[2 * i + 2]
        d1_1 = omega_ref * x2
        d2_1 = -wa * x1
        d3_1 = omega_ref * x5
        d4_1 = -wa * x5
        d5_1 = 2.0 * omega_ref * x4 - 2.0 * wa * x3
        y1 = x1 + h * d1_1
        y2 = x2 + h * d2_1
        y3 = x3 + h * d3_1
        y4 = x4 + h * d4_1
        y5 = x5 + h * d5_1
        d1_2 = omega_ref * y2
        d2_2 = -wm * y1
        d3_2 = omega_ref * y5
        d4_2 = -wm * y5
        d5_2 = 2.0 * omega_ref * y4 - 2.0 * wm * y3
        y1 = x1 + h * d1_2
        y2 = x2 + h * d2_2
        y3 = x3 + h * d3_2
        y4 = x4 + h * d4_2
        y5 = x5 + h * d5_2
        d1_3 = omega_ref * y2
        d2_3 = -wm * y1
        d3_3 = omega_ref * y5
        d4_3 = -wm * y5
        d5_3 = 2.0 * omega_ref * y4 - 2.0 * wm * y3
        y1 = x1 + h_t * d1_3
        y2 = x2 + h_t * d2_3
        y3 = x3 + h_t * d3_3
        y4 = x4 + h_t * d4_3
        y5 = x5 + h_t * d5_3
        d1_4 = omega_ref * y2
        d2_4 = -wb * y1
        d3_4 = omega_ref * y5
        d4_4 = -wb * y5
        d5_4 = 2.0 * omega_ref * y4 - 2.0 * wb * y3
        x1 += (h_t / 6.0) * (d1_1 + 2.0 * d1_2 + 2.0 * d1_3 + d1_4)
        x2 += (h_t / 6.0) * (d2_1 + 2.0 * d2_2 + 2.0 * d2_3 + d2_4)
        x3 += (h_t / 6.0) * (d3_1 + 2.0 * d3_2 + 2.0 * d3_3 + d3_4)
        x4 += (h_t / 6.0) * (d4_1 + 2.0 * d4_2 + 2.0 * d4_3 + d4_4)
        x5 += (h_t / 6.0) * (d5_1 + 2.0 * d5_2 + 2.0 * d5_3 + d5_4)
        out[i + 1] = (x1, x2, x3, x4, x5)

    vq = out[:, 2] - out[:, 0] ** 2
    vp = out[:, 3] - out[:, 1] ** 2
    det = vq * vp - (0.5 * out[:, 4] - out[:, 0] * out[:, 1]) ** 2
    if np.min(vq) <= 0.0 or np.min(vp) <= 0.0:
        raise IntegrationAccuracyError("a variance went nonpositive; reduce dt")
    if np.min(det) < 1.0 - _HEISENBERG_TOL:
        raise IntegrationAccuracyError(
            f"uncertainty product fell to {np.min(det):.12f} (hbar^2/4 units); reduce dt")
    drift = float(np.max(np.abs(det / det[0] - 1.0)))
    if drift > _DETV_DRIFT_GUARD:
        raise IntegrationAccuracyError(
            f"det V drifted by {drift:.2e} (conserved quantity); reduce dt")
    t = np.linspace(0.0, protocol.tf, n + 1)
    return MomentTrajectory(t=t, moments=out * scale, mass=state0.mass)


def classical_mode(q0: float, p0: float, traj: ErmakovTrajectory,
                   pair: TrapPair, t):
    """Classical trajectory through the scaling solution (analytic).

    q(t) = b [q0 cos(omega0 g) + (p0 / m omega0) sin(omega0 g)],
    p(t) = m dq/dt.

    t must lie on the trajectory grid.  Because b(tf) = gamma and
    bdot(tf) = 0 for a frictionless schedule, the endpoint satisfies
    E_f/omega_f = E_0/omega_0 (adiabatic invariant carried exactly).
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    idx = np.searchsorted(traj.t, t_arr)
    idx = np.clip(idx, 0, len(traj.t) - 1)
    left = np.clip(idx - 1, 0, None)
    idx = np.where(np.abs(traj.t[left] - t_arr) < np.abs(traj.t[idx] - t_arr), left, idx)
    if np.any(np.abs(traj.t[idx] - t_arr) > 1e-9 * traj.t[-1]):
        raise ValueError("t must lie on the trajectory grid")
    b = traj.b[idx]
    bd = traj.bdot[idx]
    g = traj.g[idx]
    m = pair.mass
    w0 = pair.omega0
    th = w0 * g
    u = q0 * np.cos(th) + (p0 / (m * w0)) * np.sin(th)
    du = (-q0 * w0 * np.sin(th) + (p0 / m) * np.cos(th))
    q = b * u
    p = m * (bd * u + du / b)
    if np.ndim(t) == 0:
        return float(q[0]), float(p[0])
    return q, p
