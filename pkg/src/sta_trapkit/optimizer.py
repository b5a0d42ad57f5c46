"""Slew-rate shaping of shortcut schedules.

Control electronics limit how fast the trap curvature can move, so the
figure of merit is the peak slew max |d(omega^2)/dt| over the schedule.
The mean value theorem gives the floor |omega0^2 - omegaf^2| / tf that no
schedule can beat; the minimal degree-5 design overshoots it by orders of
magnitude at nanosecond durations, and adding free polynomial coefficients
a_k (k >= 6) to the scaling ansatz claws part of that back while the
boundary conditions stay exact (a0..a5 are re-solved for every candidate).

max(...) over the grid is only piecewise smooth in the coefficients, so the
search descends a smoothed p-norm proxy (p = 16) with central-difference
gradients, Barzilai-Borwein step sizes and a backtracking line search, then
reports the true grid max of the winner.  Everything is deterministic:
fixed starts, fixed grids, no RNG.  The BB step matters: families with two
or more free coefficients form a narrow curved valley where a fixed-step
descent needs thousands of iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateAnsatzError
from .protocol import Protocol, TrapPair, b_extended, omega_sq_shortcut_dt

_FD_REL = 1e-4
_ARMIJO_C = 1e-4
_MAX_BACKTRACK = 40
_MAX_ITER = 6000
_START_SPREAD = 8.0
# declare convergence after this many consecutive near-zero improvements
_F_STALL_TOL = 1e-9
_F_STALL_RUNS = 3


@dataclass(frozen=True)
class SlewObjective:
    """Search settings for one trap pair.

    indices: which extra polynomial coefficients are free (all >= 6).
    grid: sample count for the smoothed objective; final_grid: where the
    true max is measured.  p: softness of the max proxy.
    """

    pair: TrapPair
    indices: tuple[int, ...] = (6,)
    grid: int = 4001
    p: float = 16.0
    final_grid: int = 16001

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(k) for k in self.indices))
        if self.grid < 1001 or self.final_grid < 1001:
            raise ValueError("slew grids need at least 1001 points")
        if any(k < 6 for k in self.indices):
            raise ValueError("free coefficient indices must be >= 6")
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("free coefficient indices must be distinct")
        if self.p < 2.0:
            raise ValueError("p-norm softness must be at least 2")


def slew_lower_bound(pair: TrapPair) -> float:
    """Mean-value-theorem floor |omega0^2 - omegaf^2| / tf on the peak slew."""
    return abs(pair.omega0**2 - pair.omegaf**2) / pair.tf


def max_slew(protocol: Protocol, n: int = 16001) -> float:
    """Peak |d(omega^2)/dt| of a schedule on a dense grid.

    Uses the schedule's analytic derivative when it has one, otherwise a
    centered difference on a fine grid.
    """
    t = np.linspace(0.0, protocol.tf, n)
    if protocol.omega_sq_dt is not None:
        return float(np.max(np.abs(protocol.omega_sq_dt(t))))
    h = protocol.tf / (8.0 * (n - 1))
    lo = np.clip(t - h, 0.0, protocol.tf)
    hi = np.clip(t + h, 0.0, protocol.tf)
    d = (np.asarray(protocol.omega_sq(hi)) - np.asarray(protocol.omega_sq(lo))) / (hi - lo)
    return float(np.max(np.abs(d)))


def max_abs_omega_sq(protocol: Protocol, n: int = 4001) -> float:
    """Peak |omega^2| of a schedule on a dense grid."""
    _, w2 = protocol.sample(n)
    return float(np.max(np.abs(w2)))


def _slew_max_extended(pair: TrapPair, extra: dict, n: int) -> float:
    b = b_extended(pair, extra)
    s = np.linspace(0.0, pair.tf, n)
    return float(np.max(np.abs(omega_sq_shortcut_dt(b, pair, s))))


@dataclass(frozen=True)
class OptimizeResult:
    coefficients: dict
    ratio: float
    baseline_slew: float
    optimized_slew: float
    objective_value: float
    converged: bool
    iterations: int
    message: str = ""
    starts: tuple = field(default_factory=tuple)


def optimize_extra_coeffs(objective: SlewObjective, n_extra: int | None = None) -> OptimizeResult:
    """Minimize the peak slew over the extended scaling-function family.

    n_extra overrides the objective's index set with (6, ..., 5 + n_extra).
    Runs one descent from each of the fixed starts 0 and +-8 per coefficient
    (plus, for two or more coefficients, a warm start from the smaller
    family's optimum) and keeps the best.  The returned ratio is the true
    grid max of the winner against the minimal design, both on final_grid.
    """
    if n_extra is not None:
        if n_extra < 0:
            raise ValueError("n_extra must be nonnegative")
        objective = SlewObjective(objective.pair, tuple(range(6, 6 + n_extra)),
                                  objective.grid, objective.p, objective.final_grid)
    idx = objective.indices
    pair = objective.pair
    s0 = _slew_max_extended(pair, {}, objective.final_grid)
    if not idx:
        return OptimizeResult({}, 1.0, s0, s0, 1.0, True, 0, "no free coefficients")

    p = objective.p
    s_grid = np.linspace(0.0, pair.tf, objective.grid)

    def J(a):
        # outside the set where b(s) > 0 the schedule does not exist;
        # extended-value inf makes the line search back off on its own
        try:
            b = b_extended(pair, dict(zip(idx, a)))
            sl = np.abs(omega_sq_shortcut_dt(b, pair, s_grid)) / s0
        except DegenerateAnsatzError:
            return math.inf
        return float(np.mean(sl**p) ** (1.0 / p))

    def grad(x):
        g = np.zeros_like(x)
        for i in range(len(x)):
            h = _FD_REL * (1.0 + abs(x[i]))
            for _ in range(3):  # shrink the stencil if it pokes out of the feasible set
                e = np.zeros_like(x)
                e[i] = h
                d = (J(x + e) - J(x - e)) / (2.0 * h)
                if math.isfinite(d):
                    g[i] = d
                    break
                h /= 8.0
        return g

    def descend(x0):
        x = np.array(x0, dtype=float)
        f = J(x)
        g = grad(x)
        alpha = 0.5 / max(float(np.linalg.norm(g)), 1e-30)
        it = 0
        stall = 0
        for it in range(1, _MAX_ITER + 1):
            gn2 = float(g @ g)
            if math.sqrt(gn2) < 1e-10:
                return x, f, it, True
            a = alpha
            ok = False
            for _ in range(_MAX_BACKTRACK):
                xn = x - a * g
                fn = J(xn)
                if fn < f - _ARMIJO_C * a * gn2:
                    ok = True
                    break
                a *= 0.5
            if not ok:
                # line search exhausted: flat to within rounding
                return x, f, it, True
            g_new = grad(xn)
            s = xn - x
            y = g_new - g
            sy = float(s @ y)
            # Barzilai-Borwein trial step for the next iteration
            alpha = float(s @ s) / sy if sy > 0.0 else 2.0 * a
            stall = stall + 1 if f - fn < _F_STALL_TOL * f else 0
            x, f, g = xn, fn, g_new
            if stall >= _F_STALL_RUNS:
                return x, f, it, True
            if float(np.linalg.norm(s)) < 1e-12 * (1.0 + float(np.linalg.norm(x))):
                return x, f, it, True
        return x, f, it, False

    starts = [np.zeros(len(idx)), np.full(len(idx), _START_SPREAD),
              np.full(len(idx), -_START_SPREAD)]
    if len(idx) >= 2:
        inner = optimize_extra_coeffs(
            SlewObjective(pair, idx[:-1], objective.grid, p, objective.final_grid))
        starts.append(np.array([inner.coefficients[k] for k in idx[:-1]] + [0.0]))

    best = None
    runs = []
    for x0 in starts:
        x, f, it, conv = descend(x0)
        runs.append((tuple(x0), tuple(x), f, conv, it))
        if best is None or f < best[1]:
            best = (x, f, it, conv)
    x, f, it, conv = best
    coeffs = dict(zip(idx, (float(v) for v in x)))
    opt = _slew_max_extended(pair, coeffs, objective.final_grid)
    return OptimizeResult(
        coefficients=coeffs,
        ratio=opt / s0,
        baseline_slew=s0,
        optimized_slew=opt,
        objective_value=f,
        converged=conv,
        iterations=it,
        message="" if conv else "iteration limit reached; best point so far",
        starts=tuple(runs),
    )
