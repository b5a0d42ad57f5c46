"""Classical 3D ion dynamics through the full experimental control sequence.

The sequence alternates RF (Paul trap) phases and DC-only shortcut phases:

  RF phase.  Lowest-order Mathieu model with drive parameter
  q_M = 2 sqrt(2) omega_sec / omega_RF:

      a_x = -[q_M (omega_RF^2/2) cos(omega_RF t + phi) - omega_z^2/2] x
      a_y = same as x
      a_z = -omega_z^2 z.

  The +omega_z^2/2 radial term is the defocusing the end caps must exert so
  the static potential obeys Laplace's equation.  The RF drive is modeled
  radially symmetric (both transverse directions driven in phase), keeping
  only the confining secular effect at lowest order.

  Shortcut phase.  The RF is off and a DC field supplies the radial control
  curvature omega^2(t); Laplace then forces the axial curvature to -2
  omega^2.  By default the static end-cap bias is replaced entirely by the
  control:

      a_x = a_y = -omega^2(t) x,   a_z = +2 omega^2(t) z.

  Optionally the end caps stay energized, which shifts the radial curvature
  by -omega_z^2/2 and the axial one by +omega_z^2 (the sum of the three
  static curvatures is zero either way).

Integration is velocity Verlet with one acceleration evaluation per step
(the end-of-step value is reused).  Step times are computed as
phase_start + (i+1) dt, not accumulated, so runs at halved dt share their
phase boundary times exactly.

Switching is instantaneous and synchronized to the RF phase: the sequence
builder picks each RF phase's offset phi so the drive sits at a configured
phase (default cos = +1) at the switch instant.  A linear amplitude
ramp-over of a few RF cycles is available to study switching artifacts.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSamplesError, WindowTooShortError
from .protocol import Protocol, TrapPair

ESCAPE_RADIUS_DEFAULT = 100e-6  # m

_RF_DIV = 256          # default steps per RF period
_SHORTCUT_STEPS = 4000  # default steps across a shortcut phase
_HANDOFF_RTOL = 1e-6


def mathieu_q(secular: float, rf_freq: float) -> float:
    """Lowest-order drive parameter q_M = 2 sqrt(2) omega_sec / omega_RF."""
    return 2.0 * math.sqrt(2.0) * secular / rf_freq


@dataclass(frozen=True)
class RfPhase:
    """RF-on segment holding a radial secular frequency.

    phi is the RF drive offset: the drive factor is cos(omega_RF t + phi)
    with t the absolute sequence time.  ramp_on/ramp_off_cycles linearly
    scale the drive amplitude over that many RF periods at the segment's
    edges (0 = hard switching).
    """

    duration: float
    secular: float
    rf_freq: float
    axial: float
    phi: float = 0.0
    ramp_on_cycles: float = 0.0
    ramp_off_cycles: float = 0.0

    def __post_init__(self):
        if self.duration <= 0.0 or self.secular <= 0.0 or self.rf_freq <= 0.0:
            raise ValueError("duration, secular and rf_freq must be positive")
        if self.axial < 0.0:
            raise ValueError("axial frequency must be nonnegative")

    @property
    def q_mathieu(self) -> float:
        return mathieu_q(self.secular, self.rf_freq)

    @property
    def rf_period(self) -> float:
        return 2.0 * math.pi / self.rf_freq

    def static_curvatures(self) -> tuple[float, float, float]:
        """DC curvature coefficients (kx, ky, kz) with a_i = -k_i r_i."""
        wz2 = self.axial**2
        return (-0.5 * wz2, -0.5 * wz2, wz2)


@dataclass(frozen=True)
class ShortcutPhase:
    """RF-off segment driven by a DC curvature schedule.

    keep_static_axial leaves the end-cap bias (axial_static) energized on
    top of the control field; by default the control replaces it.
    """

    protocol: Protocol
    keep_static_axial: bool = False
    axial_static: float = 0.0

    def __post_init__(self):
        if self.keep_static_axial and self.axial_static <= 0.0:
            raise ValueError("keep_static_axial requires a positive axial_static")

    @property
    def duration(self) -> float:
        return self.protocol.tf

    def static_curvatures(self, t_local: float) -> tuple[float, float, float]:
        w2 = float(self.protocol.omega_sq(t_local))
        if self.keep_static_axial:
            wz2 = self.axial_static**2
            return (w2 - 0.5 * wz2, w2 - 0.5 * wz2, wz2 - 2.0 * w2)
        return (w2, w2, -2.0 * w2)


@dataclass(frozen=True)
class IonState:
    """Classical point-charge state: position (m), velocity (m/s), time (s)."""

    r: np.ndarray
    v: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if r.shape != (3,) or v.shape != (3,):
            raise ValueError("r and v must be 3-vectors")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
            raise ValueError("state components must be finite")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class ControlSequence:
    """Ordered phases plus the ion mass and an escape radius.

    Validates curvature continuity at every RF/shortcut handoff (the
    shortcut endpoints must match the neighboring secular frequencies to
    1e-6 relative) and warns when a shortcut is shorter than the RF period
    next to it.
    """

    phases: tuple
    mass: float
    escape_radius: float = ESCAPE_RADIUS_DEFAULT

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(self.phases))
        if not self.phases:
            raise ValueError("sequence needs at least one phase")
        if self.mass <= 0.0 or self.escape_radius <= 0.0:
            raise ValueError("mass and escape_radius must be positive")
        for a, b in zip(self.phases, self.phases[1:]):
            self._check_handoff(a, b)

    @staticmethod
    def _check_handoff(a, b):
        for rf, sc, w2_end in ((a, b, "start"), (b, a, "end")):
            if isinstance(rf, RfPhase) and isinstance(sc, ShortcutPhase):
                t_edge = 0.0 if w2_end == "start" else sc.protocol.tf
                w2 = float(sc.protocol.omega_sq(t_edge))
                target = rf.secular**2
                if abs(w2 - target) > _HANDOFF_RTOL * target:
                    raise ValueError(
                        f"shortcut {w2_end} curvature {w2:.6e} does not match the "
                        f"adjacent secular frequency squared {target:.6e}")
                if sc.duration <= rf.rf_period:
                    warnings.warn(
                        "shortcut duration is not longer than the neighboring RF period; "
                        "the switching model loses its timescale separation")

    @property
    def boundaries(self) -> np.ndarray:
        """Phase start times plus the total duration (len = n_phases + 1)."""
        edges = np.zeros(len(self.phases) + 1)
        edges[1:] = np.cumsum([p.duration for p in self.phases])
        return edges

    @property
    def total_duration(self) -> float:
        return float(sum(p.duration for p in self.phases))

    def phase_at(self, t: float):
        """(index, phase, start time) of the phase containing absolute t."""
        edges = self.boundaries
        if t < 0.0 or t > edges[-1] * (1.0 + 1e-12):
            raise ValueError("t outside the sequence span")
        i = min(int(np.searchsorted(edges, t, side="right")) - 1, len(self.phases) - 1)
        i = max(i, 0)
        return i, self.phases[i], float(edges[i])


def _rf_amp_factor(phase: RfPhase, t_local: float) -> float:
    f = 1.0
    if phase.ramp_on_cycles > 0.0:
        f = min(f, t_local / (phase.ramp_on_cycles * phase.rf_period))
    if phase.ramp_off_cycles > 0.0:
        f = min(f, (phase.duration - t_local) / (phase.ramp_off_cycles * phase.rf_period))
    return max(f, 0.0)


def acceleration(state: IonState, sequence: ControlSequence) -> np.ndarray:
    """Instantaneous acceleration of the ion under the active phase."""
    _, phase, start = sequence.phase_at(state.t)
    x, y, z = state.r
    if isinstance(phase, RfPhase):
        amp = _rf_amp_factor(phase, state.t - start)
        drive = (amp * phase.q_mathieu * 0.5 * phase.rf_freq**2
                 * math.cos(phase.rf_freq * state.t + phase.phi) - 0.5 * phase.axial**2)
        return np.array([-drive * x, -drive * y, -phase.axial**2 * z])
    kx, ky, kz = phase.static_curvatures(state.t - start)
    return np.array([-kx * x, -ky * y, -kz * z])


def velocity_verlet_step(state: IonState, sequence: ControlSequence, dt: float) -> IonState:
    """One velocity-Verlet update with the time-dependent field."""
    a0 = acceleration(state, sequence)
    vh = state.v + 0.5 * dt * a0
    r1 = state.r + dt * vh
    probe = IonState(r=r1, v=vh, t=state.t + dt)
    a1 = acceleration(probe, sequence)
    return IonState(r=r1, v=vh + 0.5 * dt * a1, t=state.t + dt)


@dataclass(frozen=True)
class Trajectory:
    """Sampled ion states in phase order.

    phase_steps[i] is the number of samples phase i contributed, so phase
    i's samples (including its shared start sample) are phase_slice(i).
    """

    t: np.ndarray
    r: np.ndarray
    v: np.ndarray
    mass: float
    phase_steps: tuple[int, ...]
    lost: bool = False
    loss_time: float | None = None
    meta: dict = field(default_factory=dict)

    def phase_slice(self, i: int) -> slice:
        starts = np.concatenate(([0], np.cumsum(self.phase_steps)))
        return slice(int(starts[i]), int(min(starts[i + 1] + 1, len(self.t))))

    @property
    def final(self) -> IonState:
        return IonState(r=self.r[-1], v=self.v[-1], t=float(self.t[-1]))


def _phase_dt(phase, sequence: ControlSequence, index: int) -> float:
    if isinstance(phase, RfPhase):
        return phase.rf_period / _RF_DIV
    dt = phase.duration / _SHORTCUT_STEPS
    for j in (index - 1, index + 1):
        if 0 <= j < len(sequence.phases) and isinstance(sequence.phases[j], RfPhase):
            dt = min(dt, sequence.phases[j].rf_period / _RF_DIV)
    return dt


def simulate(sequence: ControlSequence, state0: IonState,
             dt: float | None = None, dt_scale: float = 1.0,
             record_every: int = 1) -> Trajectory:
    """Integrate the whole sequence, recording every record_every-th step.

    dt=None uses the per-phase policy (RF period / 256 during RF phases;
    shortcut duration / 4000 or the neighboring RF step, whichever is
    smaller) scaled by dt_scale.  An explicit dt applies to every phase.
    Each phase runs round(duration/dt) steps of exactly duration/n, so
    commensurate durations make halved-dt runs share all boundary times.

    record_every thins the stored samples (the last step of each phase is
    always kept), which keeps memory flat when dt_scale shrinks the step.

    If |r| exceeds the escape radius the run stops; the partial trajectory
    is returned with the loss flag and time set.
    """
    if dt_scale <= 0.0:
        raise ValueError("dt_scale must be positive")
    rec = int(record_every)
    if rec < 1:
        raise ValueError("record_every must be at least 1")
    per_phase = []
    for i, phase in enumerate(sequence.phases):
        d = dt if dt is not None else _phase_dt(phase, sequence, i) * dt_scale
        n = max(1, round(phase.duration / d))
        per_phase.append((n, phase.duration / n))
    total = sum(n // rec + (1 if n % rec else 0) for n, _ in per_phase)
    T = np.empty(total + 1)
    R = np.empty((total + 1, 3))
    V = np.empty((total + 1, 3))
    x, y, z = (float(c) for c in state0.r)
    vx, vy, vz = (float(c) for c in state0.v)
    T[0] = 0.0
    R[0] = (x, y, z)
    V[0] = (vx, vy, vz)
    r_esc_sq = sequence.escape_radius**2
    edges = sequence.boundaries
    k = 0
    lost = False
    loss_time = None
    samples_done = []
    for i, (phase, (n, h)) in enumerate(zip(sequence.phases, per_phase)):
        t0 = float(edges[i])
        half = 0.5 * h
        done = 0
        if isinstance(phase, RfPhase):
            wrf = phase.rf_freq
            phi = phase.phi
            cdrv = phase.q_mathieu * 0.5 * wrf * wrf
            dstat = 0.5 * phase.axial**2
            wz2 = phase.axial**2
            ramped = phase.ramp_on_cycles > 0.0 or phase.ramp_off_cycles > 0.0
            amp = _rf_amp_factor(phase, 0.0) if ramped else 1.0
            d = amp * cdrv * math.cos(wrf * t0 + phi) - dstat
            ax, ay, az = -d * x, -d * y, -wz2 * z
            for j in range(n):
                vxh = vx + half * ax
                vyh = vy + half * ay
                vzh = vz + half * az
                x += h * vxh
                y += h * vyh
                z += h * vzh
                t = t0 + (j + 1) * h
                if ramped:
                    amp = _rf_amp_factor(phase, t - t0)
                d = amp * cdrv * math.cos(wrf * t + phi) - dstat
                ax, ay, az = -d * x, -d * y, -wz2 * z
                vx = vxh + half * ax
                vy = vyh + half * ay
                vz = vzh + half * az
                esc = x * x + y * y + z * z > r_esc_sq
                if (j + 1) % rec == 0 or j + 1 == n or esc:
                    k += 1
                    T[k] = t
                    R[k] = (x, y, z)
                    V[k] = (vx, vy, vz)
                    done += 1
                if esc:
                    lost = True
                    loss_time = t
                    break
        else:
            w2f = phase.protocol.omega_sq
            keep = phase.keep_static_axial
            wz2 = phase.axial_static**2 if keep else 0.0
            w2 = float(w2f(0.0))
            kx = w2 - 0.5 * wz2 if keep else w2
            kz = wz2 - 2.0 * w2 if keep else -2.0 * w2
            ax, ay, az = -kx * x, -kx * y, -kz * z
            for j in range(n):
                vxh = vx + half * ax
                vyh = vy + half * ay
                vzh = vz + half * az
                x += h * vxh
                y += h * vyh
                z += h * vzh
                w2 = float(w2f((j + 1) * h))
                kx = w2 - 0.5 * wz2 if keep else w2
                kz = wz2 - 2.0 * w2 if keep else -2.0 * w2
                ax, ay, az = -kx * x, -kx * y, -kz * z
                vx = vxh + half * ax
                vy = vyh + half * ay
                vz = vzh + half * az
                esc = x * x + y * y + z * z > r_esc_sq
                if (j + 1) % rec == 0 or j + 1 == n or esc:
                    k += 1
                    T[k] = t0 + (j + 1) * h
                    R[k] = (x, y, z)
                    V[k] = (vx, vy, vz)
                    done += 1
                if esc:
                    lost = True
                    loss_time = float(t0 + (j + 1) * h)
                    break
        samples_done.append(done)
        if lost:
            break
    return Trajectory(
        t=T[:k + 1].copy(), r=R[:k + 1].copy(), v=V[:k + 1].copy(),
        mass=sequence.mass, phase_steps=tuple(samples_done),
        lost=lost, loss_time=loss_time,
        meta={"dt": tuple(h for _, h in per_phase), "record_every": rec},
    )


def _box_filter(sig: np.ndarray, k: int) -> np.ndarray:
    return np.convolve(sig, np.ones(k) / k, mode="valid")


def _window_samples(traj: Trajectory, window) -> tuple[slice, float]:
    t0, t1 = window
    i0 = int(np.searchsorted(traj.t, t0 - 1e-15))
    i1 = int(np.searchsorted(traj.t, t1 + 1e-15))
    if i1 - i0 < 4:
        raise WindowTooShortError("window holds too few samples")
    dts = np.diff(traj.t[i0:i1])
    dt = float(dts[0])
    if np.max(np.abs(dts - dt)) > 1e-6 * dt:
        raise ValueError("window must lie inside a single uniformly sampled phase")
    return slice(i0, i1), dt


def secular_invariant(traj: Trajectory, window, omega: float,
                      rf_period: float | None = None) -> float:
    """Mean secular E/omega of the radial motion over a time window.

    The window (t0, t1) must span at least three secular periods and sit
    inside one phase.  With rf_period given, positions and velocities are
    box-filtered over one RF period first, removing the micromotion ripple
    before the energy average.
    """
    t0, t1 = window
    if t1 - t0 < 3.0 * (2.0 * math.pi / omega) * (1.0 - 1e-9):
        raise WindowTooShortError("window must span at least three secular periods")
    sl, dt = _window_samples(traj, window)
    xs = traj.r[sl, 0]
    ys = traj.r[sl, 1]
    vxs = traj.v[sl, 0]
    vys = traj.v[sl, 1]
    if rf_period is not None:
        k = max(1, round(rf_period / dt))
        if k >= len(xs):
            raise WindowTooShortError("window shorter than the RF filter span")
        xs, ys, vxs, vys = (_box_filter(s, k) for s in (xs, ys, vxs, vys))
    e = 0.5 * traj.mass * (vxs**2 + vys**2) + 0.5 * traj.mass * omega**2 * (xs**2 + ys**2)
    return float(np.mean(e)) / omega


def micromotion_ratio(traj: Trajectory, window, rf_period: float) -> float:
    """Peak micromotion excursion over peak secular amplitude in x.

    The secular component is the one-RF-period box filter of x; the
    micromotion is the residual against it.
    """
    sl, dt = _window_samples(traj, window)
    xs = traj.r[sl, 0]
    k = max(1, round(rf_period / dt))
    if k >= len(xs):
        raise WindowTooShortError("window shorter than the RF filter span")
    xf = _box_filter(xs, k)
    hf = xs[k // 2:k // 2 + len(xf)] - xf
    denom = float(np.max(np.abs(xf)))
    if denom == 0.0:
        raise DegenerateSamplesError("no secular motion in the window")
    return float(np.max(np.abs(hf))) / denom


@dataclass(frozen=True)
class EllipseFit:
    semi_major: float
    semi_minor: float
    tilt_deg: float

    @property
    def axis_ratio(self) -> float:
        return self.semi_major / self.semi_minor


def ellipse_fit(u, v, omega: float | None = None) -> EllipseFit:
    """Least-squares centered ellipse through 2D samples.

    With omega given the second coordinate is scaled to v/omega, putting
    position-velocity samples in a plane where an unexcited orbit is a
    circle.  The tilt is the angle of the longest principal axis, reported
    in (-90, 90] degrees.  Collinear or near-degenerate sample sets raise
    DegenerateSamplesError.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float) / (omega if omega is not None else 1.0)
    if u.size < 8 or u.size != v.size:
        raise DegenerateSamplesError("need at least 8 paired samples")
    u = u - u.mean()
    v = v - v.mean()
    scale = max(float(np.max(np.hypot(u, v))), 0.0)
    if scale == 0.0:
        raise DegenerateSamplesError("all samples at the center")
    m = np.column_stack([u * u, 2.0 * u * v, v * v])
    c, _, rank, _ = np.linalg.lstsq(m, np.ones(len(u)), rcond=None)
    if rank < 3:
        raise DegenerateSamplesError("samples do not determine an ellipse")
    conic = np.array([[c[0], c[1]], [c[1], c[2]]])
    evals, evecs = np.linalg.eigh(conic)
    if evals[0] <= 0.0:
        raise DegenerateSamplesError("best-fit conic is not an ellipse")
    major_vec = evecs[:, 0]  # smallest eigenvalue -> longest axis
    tilt = math.degrees(math.atan2(major_vec[1], major_vec[0]))
    if tilt > 90.0:
        tilt -= 180.0
    elif tilt <= -90.0:
        tilt += 180.0
    return EllipseFit(
        semi_major=1.0 / math.sqrt(evals[0]),
        semi_minor=1.0 / math.sqrt(evals[1]),
        tilt_deg=tilt,
    )


def standard_sequence(pair: TrapPair, protocol: Protocol, rf_freq: float,
                      axial: float, lead_periods: float = 3.0,
                      trail_duration: float = 4e-6,
                      switch_phase: float = 0.0,
                      escape_radius: float = ESCAPE_RADIUS_DEFAULT,
                      ramp_cycles: float = 0.0,
                      keep_static_axial: bool = False) -> ControlSequence:
    """RF settle -> shortcut -> RF settle, switching at a fixed RF phase.

    The lead holds lead_periods secular periods at omega0, rounded to the
    default RF step so phase boundaries land on the integration grid.  Both
    RF offsets are chosen so cos(omega_RF t + phi) equals cos(switch_phase)
    at the adjacent switch instant (default: the crest).
    """
    dt_rf = (2.0 * math.pi / rf_freq) / _RF_DIV
    t_lead = round(lead_periods * (2.0 * math.pi / pair.omega0) / dt_rf) * dt_rf
    t_trail = round(trail_duration / dt_rf) * dt_rf
    phi1 = switch_phase - rf_freq * t_lead
    phi2 = switch_phase - rf_freq * (t_lead + protocol.tf)
    phases = (
        RfPhase(duration=t_lead, secular=pair.omega0, rf_freq=rf_freq, axial=axial,
                phi=phi1, ramp_on_cycles=ramp_cycles),
        ShortcutPhase(protocol=protocol, keep_static_axial=keep_static_axial,
                      axial_static=axial if keep_static_axial else 0.0),
        RfPhase(duration=t_trail, secular=pair.omegaf, rf_freq=rf_freq, axial=axial,
                phi=phi2, ramp_off_cycles=ramp_cycles),
    )
    return ControlSequence(phases=phases, mass=pair.mass, escape_radius=escape_radius)
