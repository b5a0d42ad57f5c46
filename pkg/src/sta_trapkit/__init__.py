"""Shortcut-to-adiabaticity toolkit for time-dependent harmonic traps.

Design inverse-engineered frequency ramps omega^2(t) from polynomial
scaling functions, propagate Gaussian motional states through them, score
the outcome with Uhlmann fidelity against thermal or coherent targets,
reduce the control slew rate with extra ansatz coefficients, and check the
whole schedule classically inside a driven Paul trap.
"""

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
from .protocol import (
    BoundaryResiduals,
    Protocol,
    ProtocolKind,
    ScalingFunction,
    TrapPair,
    adiabaticity_parameter,
    anticonfinement_threshold,
    b_extended,
    b_minimal,
    constant_protocol,
    dc_axial_curvature,
    gamma,
    linear_protocol,
    min_omega_sq,
    omega_linear,
    omega_smooth,
    omega_sq_shortcut,
    omega_sq_shortcut_dt,
    shortcut_protocol,
    smooth_protocol,
    verify_boundary,
)
from .dynamics import (
    ErmakovTrajectory,
    MomentTrajectory,
    classical_mode,
    default_dt,
    phase_integral,
    propagate_moments,
    rk4_step,
    scaling_phase_integral,
    solve_ermakov,
)
from .gaussian import (
    HBAR,
    KB,
    CovarianceForm,
    GaussianState,
    coherent_state,
    covariance,
    default_n_max,
    effective_temperature,
    fidelity,
    fidelity_fock_oracle,
    ground_length,
    ground_momentum,
    log_infidelity,
    mean_energy,
    target_coherent,
    target_thermal,
    thermal_occupation,
    thermal_state,
    wigner_at,
)
from .optimizer import (
    OptimizeResult,
    SlewObjective,
    max_abs_omega_sq,
    max_slew,
    optimize_extra_coeffs,
    slew_lower_bound,
)
from .ionsim import (
    ControlSequence,
    EllipseFit,
    IonState,
    RfPhase,
    ShortcutPhase,
    Trajectory,
    acceleration,
    ellipse_fit,
    mathieu_q,
    micromotion_ratio,
    secular_invariant,
    simulate,
    standard_sequence,
    velocity_verlet_step,
)
from .config import SCHEMA, load_config, validate_config

__version__ = "1.0.0"

__all__ = [
    "BoundaryResiduals", "ConfigError", "ControlSequence", "CovarianceForm",
    "DegenerateAnsatzError", "DegenerateSamplesError", "EllipseFit",
    "ErmakovTrajectory", "FidelityConditioningError", "FockTruncationError",
    "GaussianState", "HBAR", "IntegrationAccuracyError", "InvalidStateError",
    "IonState", "KB", "MomentTrajectory", "NotThermalError", "OptimizeResult",
    "Protocol", "ProtocolKind", "RfPhase", "SCHEMA", "ScalingFunction",
    "ShortcutPhase", "SlewObjective", "Trajectory", "TrajectoryCollapseError",
    "TrapControlError", "TrapPair", "WindowTooShortError",
    "acceleration", "adiabaticity_parameter", "anticonfinement_threshold",
    "b_extended", "b_minimal", "classical_mode", "coherent_state",
    "constant_protocol", "covariance", "dc_axial_curvature", "default_dt",
    "default_n_max", "effective_temperature", "ellipse_fit", "fidelity",
    "fidelity_fock_oracle",
    "gamma", "ground_length", "ground_momentum", "linear_protocol",
    "load_config", "log_infidelity", "mathieu_q", "max_abs_omega_sq",
    "max_slew", "mean_energy", "micromotion_ratio", "min_omega_sq",
    "omega_linear", "omega_smooth", "omega_sq_shortcut", "omega_sq_shortcut_dt",
    "optimize_extra_coeffs", "phase_integral", "propagate_moments", "rk4_step",
    "scaling_phase_integral", "secular_invariant", "shortcut_protocol",
    "simulate", "slew_lower_bound", "smooth_protocol", "solve_ermakov",
    "standard_sequence", "target_coherent", "target_thermal",
    "thermal_occupation", "thermal_state", "validate_config",
    "velocity_verlet_step", "verify_boundary", "wigner_at",
]
