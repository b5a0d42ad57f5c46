"""Time-dependent harmonic trap schedules for fast expansion or compression.

The control task is to move one motional mode of a trapped ion from angular
frequency omega0 to omegaf in a fixed time tf without exciting it.  The
inverse-engineering route fixes a scaling function b(t) that satisfies the
Ermakov equation

    b'' + omega^2(t) b = omega0^2 / b^3

and reads the control curvature off it:

    omega^2(t) = omega0^2 / b^4 - b'' / b.

Frictionless transfer requires six boundary conditions,

    b(0) = 1,      b'(0) = 0,  b''(0) = 0,
    b(tf) = gamma, b'(tf) = 0, b''(tf) = 0,   gamma = sqrt(omega0/omegaf),

so the initial and final states are stationary in the instantaneous trap.  A
polynomial in s = t/tf of degree 5 is the minimal ansatz; adding powers s^k
with k >= 6 gives free coefficients for waveform shaping while a0..a5 are
re-solved to keep the boundary conditions exact.

For short tf the synthesized omega^2(t) dips below zero (a transient inverted
potential).  That is allowed for shortcut schedules; the reference ramps
(linear in omega^2, and a smooth sigmoid in omega) stay positive.

SI units throughout, frequencies angular (rad/s).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.interpolate import CubicSpline
from scipy.special import expit

from .errors import DegenerateAnsatzError

# grid used whenever a schedule property has to be established by sampling
DENSE_GRID = 4001


@dataclass(frozen=True)
class TrapPair:
    """Endpoint frequencies, duration and ion mass for one transfer.

    omega0, omegaf : angular trap frequencies (rad/s)
    tf             : transfer duration (s)
    mass           : ion mass (kg)
    """

    omega0: float
    omegaf: float
    tf: float
    mass: float

    def __post_init__(self):
        for name in ("omega0", "omegaf", "tf", "mass"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"TrapPair.{name} must be positive")

    @property
    def gamma(self) -> float:
        return math.sqrt(self.omega0 / self.omegaf)


def gamma(pair: TrapPair) -> float:
    """Expansion factor sqrt(omega0/omegaf) of the scaling function."""
    return pair.gamma


@dataclass(frozen=True)
class ScalingFunction:
    """Polynomial scaling ansatz b(s) with s = t/tf.

    coefficients are ascending powers of s.  Physical-time derivatives carry
    the 1/tf factors.
    """

    coefficients: tuple[float, ...]
    tf: float

    def __post_init__(self):
        if self.tf <= 0.0:
            raise ValueError("tf must be positive")
        if len(self.coefficients) < 1:
            raise ValueError("need at least one coefficient")
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))

    @cached_property
    def _c(self):
        return np.asarray(self.coefficients)

    @cached_property
    def _c1(self):
        return npoly.polyder(self._c, 1)

    @cached_property
    def _c2(self):
        return npoly.polyder(self._c, 2)

    @cached_property
    def _c3(self):
        return npoly.polyder(self._c, 3)

    def __call__(self, t):
        return npoly.polyval(np.asarray(t) / self.tf, self._c)

    def db(self, t):
        """First derivative in physical time."""
        return npoly.polyval(np.asarray(t) / self.tf, self._c1) / self.tf

    def d2b(self, t):
        return npoly.polyval(np.asarray(t) / self.tf, self._c2) / self.tf**2

    def d3b(self, t):
        return npoly.polyval(np.asarray(t) / self.tf, self._c3) / self.tf**3

    def reduced(self, s, order: int = 0):
        """Evaluate b or a derivative in the reduced variable s = t/tf."""
        c = (self._c, self._c1, self._c2, self._c3)[order]
        return npoly.polyval(np.asarray(s), c)


def b_minimal(pair: TrapPair) -> ScalingFunction:
    """Degree-5 ansatz meeting all six frictionless boundary conditions.

    b(s) = 1 + 10(gamma-1) s^3 - 15(gamma-1) s^4 + 6(gamma-1) s^5
    """
    g1 = pair.gamma - 1.0
    return ScalingFunction((1.0, 0.0, 0.0, 10.0 * g1, -15.0 * g1, 6.0 * g1), pair.tf)


def b_extended(pair: TrapPair, extra) -> ScalingFunction:
    """Ansatz with fixed extra coefficients a_k (k >= 6), a0..a5 re-solved.

    extra is a mapping {k: a_k} or an iterable of (k, a_k) pairs with
    distinct k.  The six boundary conditions give a 6x6 linear system for
    a0..a5 once the extra terms are moved to the right-hand side.
    """
    items = list(extra.items()) if isinstance(extra, Mapping) else [tuple(e) for e in extra]
    extra = dict(items)
    if len(extra) != len(items):
        raise ValueError("extra coefficient indices must be distinct")
    for k in extra:
        if int(k) != k or k < 6:
            raise ValueError("extra coefficient indices must be integers >= 6")
    # rows: b(0), b'(0), b''(0), b(1), b'(1), b''(1) acting on (a0..a5)
    A = np.zeros((6, 6))
    A[0, 0] = 1.0
    A[1, 1] = 1.0
    A[2, 2] = 2.0
    A[3, :] = 1.0
    A[4, :] = np.arange(6)
    A[5, :] = np.arange(6) * (np.arange(6) - 1)
    rhs = np.array([1.0, 0.0, 0.0, pair.gamma, 0.0, 0.0])
    for k, ak in extra.items():
        rhs[3] -= ak
        rhs[4] -= ak * k
        rhs[5] -= ak * k * (k - 1)
    try:
        low = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - A is fixed and regular
        raise DegenerateAnsatzError("boundary system is singular") from exc
    deg = max([5, *extra]) if extra else 5
    c = np.zeros(deg + 1)
    c[:6] = low
    for k, ak in extra.items():
        c[int(k)] += ak
    return ScalingFunction(tuple(c), pair.tf)


def omega_sq_shortcut(b: ScalingFunction, pair: TrapPair, t):
    """Control curvature omega^2(t) = omega0^2/b^4 - b''/b synthesized from b."""
    bt = b(t)
    if np.any(bt <= 0.0):
        raise DegenerateAnsatzError("scaling function is nonpositive inside [0, tf]")
    return pair.omega0**2 / bt**4 - b.d2b(t) / bt


def omega_sq_shortcut_dt(b: ScalingFunction, pair: TrapPair, t):
    """Analytic time derivative of the synthesized curvature.

    d(omega^2)/dt = -4 omega0^2 b'/b^5 - b'''/b + b'' b'/b^2
    """
    bt = b(t)
    if np.any(bt <= 0.0):
        raise DegenerateAnsatzError("scaling function is nonpositive inside [0, tf]")
    b1 = b.db(t)
    return -4.0 * pair.omega0**2 * b1 / bt**5 - b.d3b(t) / bt + b.d2b(t) * b1 / bt**2


class ProtocolKind(str, enum.Enum):
    SHORTCUT = "shortcut"
    LINEAR = "linear"
    SMOOTH = "smooth"
    CONSTANT = "constant"


@dataclass(frozen=True)
class Protocol:
    """A trap-curvature schedule omega^2(t) on [0, tf].

    omega_sq accepts scalars or arrays.  omega_sq_dt, when present, is the
    analytic time derivative used by the slew analysis.  Only SHORTCUT
    schedules may go negative; SMOOTH misses its endpoints by construction
    (0.5 percent of the frequency swing with the default rate) and is exempt
    from the endpoint identity.
    """

    kind: ProtocolKind
    omega_sq: Callable
    tf: float
    metadata: dict = field(default_factory=dict)
    omega_sq_dt: Callable | None = None

    def sample(self, n: int = DENSE_GRID):
        """Uniform grid (t, omega^2(t)) with n points on [0, tf]."""
        t = np.linspace(0.0, self.tf, n)
        return t, np.asarray(self.omega_sq(t), dtype=float)


_ENDPOINT_RTOL = 1e-9


def shortcut_protocol(b: ScalingFunction, pair: TrapPair) -> Protocol:
    """Wrap a scaling function as a schedule; checks endpoints and b > 0.

    The degenerate gamma = 1 request collapses to the constant protocol.
    """
    s = np.linspace(0.0, 1.0, DENSE_GRID)
    if np.any(b.reduced(s) <= 0.0):
        raise DegenerateAnsatzError("scaling function is nonpositive inside [0, tf]")
    if pair.omega0 == pair.omegaf:
        out = constant_protocol(pair.omega0, b.tf)
        out.metadata.update({"scaling": b, "pair": pair})
        return out
    w2 = lambda t: omega_sq_shortcut(b, pair, t)
    for t, target in ((0.0, pair.omega0**2), (b.tf, pair.omegaf**2)):
        if abs(float(w2(t)) - target) > _ENDPOINT_RTOL * target:
            raise ValueError("schedule endpoints do not match the trap pair")
    return Protocol(
        kind=ProtocolKind.SHORTCUT,
        omega_sq=w2,
        tf=b.tf,
        metadata={"scaling": b, "pair": pair},
        omega_sq_dt=lambda t: omega_sq_shortcut_dt(b, pair, t),
    )


def omega_linear(pair: TrapPair, t):
    """Linear interpolation of the curvature between omega0^2 and omegaf^2."""
    return pair.omega0**2 + (pair.omegaf**2 - pair.omega0**2) * np.asarray(t) / pair.tf


def linear_protocol(pair: TrapPair) -> Protocol:
    slope = (pair.omegaf**2 - pair.omega0**2) / pair.tf
    return Protocol(
        kind=ProtocolKind.LINEAR,
        omega_sq=lambda t: omega_linear(pair, t),
        tf=pair.tf,
        metadata={"pair": pair},
        omega_sq_dt=lambda t: np.broadcast_to(slope, np.shape(t)).copy() if np.ndim(t) else slope,
    )


def default_smooth_rate(tf: float) -> float:
    """Sigmoid rate leaving a 0.5 percent endpoint miss: 2 ln(199)/tf."""
    return 2.0 * math.log(199.0) / tf


def omega_smooth(pair: TrapPair, t, gamma_rate: float | None = None,
                 t0: float | None = None):
    """Squared sigmoid frequency sweep.

    omega(t) = (omega0 e^{G t0} + omegaf e^{G t}) / (e^{G t0} + e^{G t})

    evaluated in logistic form so large G t never overflows.  The sweep only
    approaches the endpoint frequencies asymptotically; with the default rate
    G = 2 ln(199)/tf and t0 = tf/2, the miss at t = 0 and t = tf is 0.5
    percent of (omegaf - omega0).
    """
    G = default_smooth_rate(pair.tf) if gamma_rate is None else gamma_rate
    tc = 0.5 * pair.tf if t0 is None else t0
    u = G * (np.asarray(t) - tc)
    w = pair.omega0 * expit(-u) + pair.omegaf * expit(u)
    return w * w


def smooth_protocol(pair: TrapPair, gamma_rate: float | None = None,
                    t0: float | None = None) -> Protocol:
    G = default_smooth_rate(pair.tf) if gamma_rate is None else gamma_rate
    tc = 0.5 * pair.tf if t0 is None else t0

    def w2dt(t):
        u = G * (np.asarray(t) - tc)
        sig = expit(u)
        w = pair.omega0 * (1.0 - sig) + pair.omegaf * sig
        dw = (pair.omegaf - pair.omega0) * G * sig * (1.0 - sig)
        return 2.0 * w * dw

    return Protocol(
        kind=ProtocolKind.SMOOTH,
        omega_sq=lambda t: omega_smooth(pair, t, G, tc),
        tf=pair.tf,
        metadata={"pair": pair, "gamma_rate": G, "t0": tc, "endpoint_exempt": True},
        omega_sq_dt=w2dt,
    )


def constant_protocol(omega: float, tf: float) -> Protocol:
    """Static trap held at a single frequency, e.g. the gamma = 1 case."""
    w2v = omega * omega

    def w2(t):
        return np.broadcast_to(w2v, np.shape(t)).copy() if np.ndim(t) else w2v

    def w2dt(t):
        return np.zeros(np.shape(t)) if np.ndim(t) else 0.0

    return Protocol(ProtocolKind.CONSTANT, w2, tf, {"omega": omega}, w2dt)


def protocol_from_samples(t, w2, kind: ProtocolKind, metadata: dict | None = None) -> Protocol:
    """Rebuild a schedule from tabulated samples via cubic interpolation."""
    t = np.asarray(t, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    spline = CubicSpline(t, w2)
    deriv = spline.derivative()
    return Protocol(kind, spline, float(t[-1]), dict(metadata or {}), deriv)


@dataclass(frozen=True)
class BoundaryResiduals:
    """Frictionless boundary-condition residuals of a scaling function.

    Derivative entries are normalized by gamma/tf and gamma/tf^2 so all six
    numbers share the dimensionless scale of b itself.
    """

    b_start: float
    db_start: float
    d2b_start: float
    b_end: float
    db_end: float
    d2b_end: float

    def max(self) -> float:
        return max(self.b_start, self.db_start, self.d2b_start,
                   self.b_end, self.db_end, self.d2b_end)


def verify_boundary(b: ScalingFunction, pair: TrapPair) -> BoundaryResiduals:
    g = pair.gamma
    tf = b.tf
    return BoundaryResiduals(
        b_start=abs(float(b(0.0)) - 1.0),
        db_start=abs(float(b.db(0.0))) * tf / g,
        d2b_start=abs(float(b.d2b(0.0))) * tf**2 / g,
        b_end=abs(float(b(tf)) - g),
        db_end=abs(float(b.db(tf))) * tf / g,
        d2b_end=abs(float(b.d2b(tf))) * tf**2 / g,
    )


def adiabaticity_parameter(protocol: Protocol, t, h: float | None = None):
    """Local adiabaticity measure sqrt(2) * (d omega/dt) / (8 omega^2).

    omega is the sign-preserving square root of the schedule, and its rate is
    taken by a centered difference with stencil h (default tf/4000, clipped at
    the schedule boundaries).  The measure diverges where omega^2 crosses
    zero; exact zeros map to a signed infinity.
    """
    if h is None:
        h = protocol.tf / 4000.0
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    lo = np.clip(t - h, 0.0, protocol.tf)
    hi = np.clip(t + h, 0.0, protocol.tf)

    def signed_sqrt(x):
        return np.sign(x) * np.sqrt(np.abs(x))

    w_dot = (signed_sqrt(protocol.omega_sq(hi)) - signed_sqrt(protocol.omega_sq(lo))) / (hi - lo)
    w2 = np.asarray(protocol.omega_sq(t), dtype=float)
    out = np.empty_like(w2)
    zero = w2 == 0.0
    with np.errstate(divide="ignore"):
        out[~zero] = math.sqrt(2.0) * w_dot[~zero] / (8.0 * w2[~zero])
    out[zero] = np.copysign(np.inf, w_dot[zero])
    return float(out[0]) if scalar else out


def dc_axial_curvature(omega_sq_radial):
    """Axial curvature a static quadrupole must supply alongside a radial one.

    Laplace's equation forces the three curvatures of a DC potential to sum
    to zero; for equal radial curvatures w2 each, the axial one is -2 w2.
    """
    return -2.0 * np.asarray(omega_sq_radial)


def radial_curvature_from_axial(omega_sq_axial):
    """Inverse of dc_axial_curvature."""
    return -0.5 * np.asarray(omega_sq_axial)


def min_omega_sq(b: ScalingFunction, pair: TrapPair, n: int = DENSE_GRID) -> float:
    """Grid minimum of the synthesized curvature; negative means a transient
    inverted trap."""
    t = np.linspace(0.0, b.tf, n)
    return float(np.min(omega_sq_shortcut(b, pair, t)))


def anticonfinement_threshold(pair: TrapPair, n: int = DENSE_GRID,
                              iterations: int = 60) -> tuple[float, float]:
    """Bracket the shortest duration whose minimal shortcut stays positive.

    Returns (tf_neg, tf_pos): the schedule dips negative at tf_neg and stays
    nonnegative at tf_pos.  The predicate is monotone in tf because the
    destabilizing term scales as 1/tf^2 while omega0^2/b^4 is positive and
    tf-independent, so geometric bisection is valid.  The final bracket ratio
    is far below 2.
    """
    s = np.linspace(0.0, 1.0, n)
    g1 = pair.gamma - 1.0
    c = np.array([1.0, 0.0, 0.0, 10.0 * g1, -15.0 * g1, 6.0 * g1])
    bs = npoly.polyval(s, c)
    b2s = npoly.polyval(s, npoly.polyder(c, 2))
    base = pair.omega0**2 / bs**4
    curv = b2s / bs

    def positive(tf):
        return np.min(base - curv / tf**2) >= 0.0

    lo = hi = pair.tf
    while positive(lo):
        lo /= 2.0
        if lo < 1e-15:
            raise ValueError("no anti-confinement found down to femtosecond scale")
    while not positive(hi):
        hi *= 2.0
        if hi > 1.0:
            raise ValueError("schedule still negative at one second")
    for _ in range(iterations):
        mid = math.sqrt(lo * hi)
        if positive(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi
