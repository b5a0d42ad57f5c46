"""Command line front end.

Subcommands: design | propagate | fidelity-sweep | optimize | simulate |
cycle-report.  Each reads one JSON config (see config.SCHEMA), writes CSV
files for curves and JSON files for scalar reports into --out, and prints a
one-line summary.  Numbers are serialized with 17 significant digits so
emitted files round-trip bit-exactly.

Exit codes: 0 ok; 2 config error; 3 physics failure (ion lost, or an
acceptance threshold missed under --assert); 4 numerical failure.
"""

from __future__ import annotations

import argparse
import cmath
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import (
    TWO_PI,
    build_pair,
    build_protocol,
    build_state,
    load_config,
    require_blocks,
)
from .dynamics import default_dt, propagate_moments, scaling_phase_integral
from .errors import (
    ConfigError,
    DegenerateAnsatzError,
    DegenerateSamplesError,
    FidelityConditioningError,
    FockTruncationError,
    IntegrationAccuracyError,
    InvalidStateError,
    NotThermalError,
    TrajectoryCollapseError,
    TrapControlError,
    WindowTooShortError,
)
from .gaussian import (
    KB,
    effective_temperature,
    fidelity,
    mean_energy,
    target_coherent,
    target_thermal,
    thermal_state,
)
from .ionsim import IonState, ellipse_fit, secular_invariant, simulate, standard_sequence
from .optimizer import (
    SlewObjective,
    max_abs_omega_sq,
    max_slew,
    optimize_extra_coeffs,
    slew_lower_bound,
)
from .protocol import (
    DENSE_GRID,
    adiabaticity_parameter,
    b_extended,
    b_minimal,
    omega_sq_shortcut,
    shortcut_protocol,
    verify_boundary,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PHYSICS = 3
EXIT_NUMERICAL = 4

FIDELITY_THRESHOLD = 0.999
INVARIANT_BAND = (0.95, 1.05)
TILT_LIMIT_DEG = 5.0
RATIO_THRESHOLD = 0.8
RESIDUAL_LIMIT = 1e-12


class PhysicsAssertion(Exception):
    """Raised when --assert finds a physics threshold missed."""


class NumericalAssertion(Exception):
    """Raised when --assert finds a numerical-quality threshold missed."""


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return "%.17g" % float(v)


def _write_csv(path: str, header, columns) -> None:
    rows = zip(*columns)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _moments_dict(state) -> dict:
    return {f"x{i}": float(v) for i, v in enumerate(state.moments, start=1)}


def _score_against_target(cfg: dict, pair, kind: str, b, state0, final_state):
    """Fidelity of the propagated state against the run's target.

    Thermal runs target the thermal state at (omega_f, T0 omega_f/omega0);
    coherent runs the rotated coherent state with the design's phase
    integral (the minimal design serves as reference for ramp kinds).  A
    constant protocol changes nothing, so its target is the initial state.
    """
    s = cfg["state"]
    info: dict = {}
    if kind == "constant":
        target = state0
        info["kind"] = "initial"
    elif "thermal" in s:
        t0 = s["thermal"]["T_K"]
        target = target_thermal(pair, t0)
        info.update(kind="thermal", T0_K=t0,
                    T_target_K=t0 * pair.omegaf / pair.omega0)
    else:
        alpha0 = complex(s["coherent"]["re"], s["coherent"]["im"])
        bb = b if b is not None else b_minimal(pair)
        g = scaling_phase_integral(bb)
        alpha_f = alpha0 * cmath.exp(-1j * g * pair.omega0)
        target = target_coherent(pair, alpha0, g)
        info.update(kind="coherent",
                    alpha0={"re": alpha0.real, "im": alpha0.imag},
                    alpha_f={"re": alpha_f.real, "im": alpha_f.imag},
                    phase_integral_s=g)
    return fidelity(final_state, target), info


def cmd_design(cfg, outdir, args, threads) -> int:
    pair = build_pair(cfg)
    protocol, b = build_protocol(cfg, pair)
    t = np.linspace(0.0, protocol.tf, DENSE_GRID)
    w2 = np.asarray(protocol.omega_sq(t), dtype=float)
    _write_csv(os.path.join(outdir, "omega_sq.csv"), ["t_s", "omega_sq"], [t, w2])
    adia = adiabaticity_parameter(protocol, t)
    _write_csv(os.path.join(outdir, "adiabaticity.csv"), ["t_s", "adiabaticity"], [t, adia])
    residual = None
    if b is not None:
        _write_csv(os.path.join(outdir, "b.csv"), ["t_s", "b", "bdot", "bddot"],
                   [t, b(t), b.db(t), b.d2b(t)])
        residual = verify_boundary(b, pair).max()
    slew = max_slew(protocol)
    bound = slew_lower_bound(pair)
    print(f"design: kind={protocol.kind.value} gamma={pair.gamma:.9g} "
          f"min_omega_sq={float(w2.min()):.9g} max_slew={slew:.9g} slew_bound={bound:.9g}"
          + (f" boundary_residual={residual:.3g}" if residual is not None else ""))
    if args.do_assert and residual is not None and residual >= RESIDUAL_LIMIT:
        raise PhysicsAssertion(f"boundary residual {residual:.3g} above {RESIDUAL_LIMIT}")
    return EXIT_OK


def cmd_propagate(cfg, outdir, args, threads) -> int:
    pair = build_pair(cfg)
    protocol, b = build_protocol(cfg, pair)
    state0 = build_state(cfg, pair)
    dt = default_dt(protocol) * args.dt_scale
    traj = propagate_moments(state0, protocol, dt=dt)
    _write_csv(os.path.join(outdir, "moments.csv"),
               ["t_s", "x1", "x2", "x3", "x4", "x5"],
               [traj.t] + [traj.moments[:, i] for i in range(5)])
    final = traj.final_state
    fid, target_info = _score_against_target(cfg, pair, protocol.kind.value, b, state0, final)
    report = {
        "protocol": protocol.kind.value,
        "tf_s": pair.tf,
        "dt_s": dt,
        "fidelity": fid,
        "final_moments": _moments_dict(final),
        "target": target_info,
    }
    if target_info.get("kind") == "thermal":
        try:
            report["T_eff_K"] = effective_temperature(final, pair.omegaf)
        except NotThermalError as exc:
            report["T_eff_K"] = None
            report["T_eff_note"] = str(exc)
    _write_json(os.path.join(outdir, "report.json"), report)
    print(f"propagate: kind={protocol.kind.value} tf={pair.tf:.9g} fidelity={fid:.9f}")
    if args.do_assert and protocol.kind.value == "shortcut" and fid < FIDELITY_THRESHOLD:
        raise PhysicsAssertion(f"fidelity {fid:.9f} below {FIDELITY_THRESHOLD}")
    return EXIT_OK


def cmd_fidelity_sweep(cfg, outdir, args, threads) -> int:
    require_blocks(cfg, "state", "sweep")
    sweep = cfg["sweep"]
    kinds = sweep.get("protocols", ["shortcut", "linear"])
    jobs = [(kind, float(tf)) for kind in kinds for tf in sweep["tf_s"]]

    def run(job):
        kind, tf = job
        try:
            pair = build_pair(cfg, tf=tf)
            protocol, b = build_protocol(cfg, pair, kind=kind)
            state0 = build_state(cfg, pair)
            traj = propagate_moments(state0, protocol,
                                     dt=default_dt(protocol) * args.dt_scale)
            fid, _ = _score_against_target(cfg, pair, kind, b, state0, traj.final_state)
            return kind, tf, fid, "ok"
        except TrapControlError as exc:
            return kind, tf, float("nan"), type(exc).__name__

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    _write_csv(os.path.join(outdir, "fidelity_vs_tf.csv"),
               ["protocol", "tf_s", "fidelity", "status"],
               [[r[i] for r in results] for i in range(4)])
    n_fail = sum(1 for r in results if r[3] != "ok")
    print(f"fidelity-sweep: {len(results)} rows, {n_fail} failures")
    if args.do_assert:
        bad = [r for r in results
               if r[0] == "shortcut" and not (r[2] >= FIDELITY_THRESHOLD)]
        if bad:
            raise PhysicsAssertion(
                f"{len(bad)} shortcut rows below fidelity {FIDELITY_THRESHOLD}")
    return EXIT_OK


def cmd_optimize(cfg, outdir, args, threads) -> int:
    pair = build_pair(cfg)
    opt = cfg.get("optimize", {})
    objective = SlewObjective(
        pair,
        indices=tuple(range(6, 6 + opt.get("n_extra", 1))) or (6,),
        grid=opt.get("grid", 4001),
        p=opt.get("p", 16.0),
    )
    n_extra = opt.get("n_extra", 1)
    result = optimize_extra_coeffs(objective, n_extra=n_extra)
    b_opt = b_extended(pair, result.coefficients) if result.coefficients else b_minimal(pair)
    t = np.linspace(0.0, pair.tf, DENSE_GRID)
    _write_csv(os.path.join(outdir, "omega_sq.csv"), ["t_s", "omega_sq"],
               [t, omega_sq_shortcut(b_opt, pair, t)])
    base = shortcut_protocol(b_minimal(pair), pair)
    improved = shortcut_protocol(b_opt, pair)
    bound = slew_lower_bound(pair)
    report = {
        "indices": list(result.coefficients.keys()),
        "coefficients": {str(k): v for k, v in result.coefficients.items()},
        "ratio": result.ratio,
        "baseline_max_slew": result.baseline_slew,
        "optimized_max_slew": result.optimized_slew,
        "slew_lower_bound": bound,
        "bound_satisfied": result.optimized_slew >= bound,
        "baseline_max_abs_omega_sq": max_abs_omega_sq(base),
        "optimized_max_abs_omega_sq": max_abs_omega_sq(improved),
        "objective_value": result.objective_value,
        "converged": result.converged,
        "iterations": result.iterations,
        "message": result.message,
        "starts": [
            {"x0": list(x0), "x": list(x), "objective": f,
             "converged": conv, "iterations": it}
            for x0, x, f, conv, it in result.starts
        ],
    }
    _write_json(os.path.join(outdir, "optimize_report.json"), report)
    print(f"optimize: n_extra={n_extra} ratio={result.ratio:.6f} "
          f"converged={result.converged}")
    if args.do_assert:
        if not result.converged:
            raise NumericalAssertion(result.message or "optimizer did not converge")
        if result.ratio > RATIO_THRESHOLD:
            raise PhysicsAssertion(
                f"slew ratio {result.ratio:.4f} above {RATIO_THRESHOLD}")
    return EXIT_OK


def _default_ic(pair) -> dict:
    # thermal rms radius at 2 mK, at rest in the secular frame
    a = math.sqrt(KB * 2e-3 / (pair.mass * pair.omega0**2))
    return {"x_m": a}


def cmd_simulate(cfg, outdir, args, threads) -> int:
    require_blocks(cfg, "sim")
    sim = cfg["sim"]
    pair = build_pair(cfg)
    protocol, _ = build_protocol(cfg, pair)
    rf = TWO_PI * sim["rf_hz"]
    wz = TWO_PI * sim["fz_hz"]
    sequence = standard_sequence(
        pair, protocol, rf, wz,
        lead_periods=sim.get("lead_periods", 3.0),
        trail_duration=sim.get("trail_s", 4e-6),
        switch_phase=sim.get("switch_phase_rad", 0.0),
        escape_radius=sim.get("escape_radius_m", 100e-6),
        ramp_cycles=sim.get("ramp_cycles", 0.0),
        keep_static_axial=sim.get("keep_static_axial", False),
    )
    ic = sim.get("ic", _default_ic(pair))
    state0 = IonState(
        r=np.array([ic.get("x_m", 0.0), ic.get("y_m", 0.0), ic.get("z_m", 0.0)]),
        v=np.array([ic.get("vx_ms", 0.0), ic.get("vy_ms", 0.0), ic.get("vz_ms", 0.0)]),
    )
    traj = simulate(sequence, state0, dt=sim.get("dt_s"), dt_scale=args.dt_scale)
    _write_csv(os.path.join(outdir, "trajectory.csv"),
               ["t", "x", "y", "z", "vx", "vy", "vz"],
               [traj.t] + [traj.r[:, i] for i in range(3)]
               + [traj.v[:, i] for i in range(3)])
    edges = sequence.boundaries
    report: dict = {
        "lost": traj.lost,
        "loss_time_s": traj.loss_time,
        "phases": {"lead_s": float(edges[1]),
                   "shortcut_s": float(edges[2] - edges[1]),
                   "trail_s": float(edges[3] - edges[2])},
        "rf_period_s": TWO_PI / rf,
        "mathieu_q": sequence.phases[0].q_mathieu,
    }
    ratio = None
    tilt = None
    if not traj.lost:
        w_lead = math.sqrt(pair.omega0**2 - 0.5 * wz**2)
        w_trail = math.sqrt(pair.omegaf**2 - 0.5 * wz**2)
        inv_lead = secular_invariant(traj, (0.0, float(edges[1])), w_lead,
                                     rf_period=TWO_PI / rf)
        inv_trail = secular_invariant(traj, (float(edges[2]), float(edges[3])), w_trail,
                                      rf_period=TWO_PI / rf)
        ratio = inv_trail / inv_lead
        sl = traj.phase_slice(2)
        xs, ys = traj.r[sl, 0], traj.r[sl, 1]
        if np.max(np.abs(ys)) > 1e-3 * np.max(np.abs(xs)):
            fit = ellipse_fit(xs, ys)
            plane = "xy"
        else:
            fit = ellipse_fit(xs, traj.v[sl, 0], omega=w_trail)
            plane = "x-vx"
        tilt = fit.tilt_deg
        report.update({
            "invariant_lead": inv_lead,
            "invariant_trail": inv_trail,
            "invariant_ratio": ratio,
            "omega_eff_lead": w_lead,
            "omega_eff_trail": w_trail,
            "ellipse": {"plane": plane, "tilt_deg": fit.tilt_deg,
                        "semi_major": fit.semi_major, "semi_minor": fit.semi_minor,
                        "axis_ratio": fit.axis_ratio},
        })
    _write_json(os.path.join(outdir, "sim_report.json"), report)
    if traj.lost:
        print(f"simulate: ion lost at t={traj.loss_time:.6g} s", file=sys.stderr)
        return EXIT_PHYSICS
    print(f"simulate: kind={protocol.kind.value} invariant_ratio={ratio:.6f} "
          f"tilt_deg={tilt:.3f}")
    if args.do_assert:
        if not (INVARIANT_BAND[0] <= ratio <= INVARIANT_BAND[1]):
            raise PhysicsAssertion(
                f"invariant ratio {ratio:.4f} outside {INVARIANT_BAND}")
        # the tilt criterion applies to the spatial ellipse only; in the
        # x-vx plane the raw velocity samples carry the micromotion ripple,
        # which doubles the velocity variance and pins the fit at 90 deg
        if plane == "xy" and abs(tilt) > TILT_LIMIT_DEG:
            raise PhysicsAssertion(f"ellipse tilt {tilt:.2f} deg above {TILT_LIMIT_DEG}")
    return EXIT_OK


def cmd_cycle_report(cfg, outdir, args, threads) -> int:
    require_blocks(cfg, "state", "cycle")
    if "thermal" not in cfg["state"]:
        raise ConfigError("cycle-report needs a thermal initial state")
    pair = build_pair(cfg)
    t0 = cfg["state"]["thermal"]["T_K"]
    t_cold = cfg["cycle"]["T_cold_K"]
    t_arrival = t0 * pair.omegaf / pair.omega0
    wf2 = pair.omegaf**2
    e_arrival = mean_energy(thermal_state(pair.omegaf, t_arrival, pair.mass), wf2)
    e_cold_eq = mean_energy(thermal_state(pair.omegaf, t_cold, pair.mass), wf2)
    q_cold = 2.0 * (e_cold_eq - e_arrival)
    report = {
        "T0_K": t0,
        "T_cold_K": t_cold,
        "T_arrival_K": t_arrival,
        "omega_f_rad_s": pair.omegaf,
        "E_per_mode_arrival_J": e_arrival,
        "E_per_mode_cold_eq_J": e_cold_eq,
        "modes": 2,
        "Q_cold_J": q_cold,
        "heat_absorbed_from_cold": q_cold > 0.0,
    }
    _write_json(os.path.join(outdir, "cycle.json"), report)
    print(f"cycle-report: T_arrival={t_arrival:.6g} K Q_cold={q_cold:.6g} J")
    if args.do_assert and q_cold <= 0.0 and t_cold > t_arrival:
        raise PhysicsAssertion("no heat absorbed despite a positive temperature gap")
    return EXIT_OK


_COMMANDS = {
    "design": cmd_design,
    "propagate": cmd_propagate,
    "fidelity-sweep": cmd_fidelity_sweep,
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
    "cycle-report": cmd_cycle_report,
}


def _resolve_threads(arg_value) -> int:
    if arg_value is not None:
        n = arg_value
    else:
        env = os.environ.get("STA_TRAPKIT_THREADS", "")
        try:
            n = int(env) if env else 1
        except ValueError:
            raise ConfigError(f"STA_TRAPKIT_THREADS is not an integer: {env!r}")
    if n < 1:
        raise ConfigError("thread count must be at least 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sta-trapkit",
        description="Design, score, and simulate fast trapped-ion frequency ramps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", default=None, help="output directory (default: config output.dir or .)")
        p.add_argument("--assert", dest="do_assert", action="store_true",
                       help="turn acceptance thresholds into exit-code failures")
        p.add_argument("--threads", type=int, default=None,
                       help="sweep worker count (default: STA_TRAPKIT_THREADS or 1)")
        p.add_argument("--dt-scale", dest="dt_scale", type=float, default=1.0,
                       help="multiply default integrator steps by this factor")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.dt_scale <= 0.0:
        print("error: --dt-scale must be positive", file=sys.stderr)
        return EXIT_CONFIG
    try:
        threads = _resolve_threads(args.threads)
        cfg = load_config(args.config)
        outdir = args.out or cfg.get("output", {}).get("dir", ".")
        os.makedirs(outdir, exist_ok=True)
        return _COMMANDS[args.command](cfg, outdir, args, threads)
    except (ConfigError, DegenerateAnsatzError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PhysicsAssertion, TrajectoryCollapseError, InvalidStateError,
            NotThermalError) as exc:
        print(f"physics failure: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except (NumericalAssertion, IntegrationAccuracyError, FidelityConditioningError,
            FockTruncationError, WindowTooShortError, DegenerateSamplesError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
