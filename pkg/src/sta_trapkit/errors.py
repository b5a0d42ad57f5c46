"""Exception types shared across the package."""


class TrapControlError(Exception):
    """Base class for all errors raised by sta_trapkit."""


class DegenerateAnsatzError(TrapControlError):
    """Scaling ansatz is unusable: singular boundary system or b(t) <= 0."""


class TrajectoryCollapseError(TrapControlError):
    """Ermakov integration drove b(t) to zero or below."""


class IntegrationAccuracyError(TrapControlError):
    """A conserved quantity drifted beyond tolerance; reduce the step size."""


class InvalidStateError(TrapControlError):
    """Second moments violate positivity or the uncertainty bound."""


class FidelityConditioningError(TrapControlError):
    """Covariance sum too ill-conditioned for a trustworthy fidelity."""


class FockTruncationError(TrapControlError):
    """Truncated Fock basis too small to represent the requested state."""


class NotThermalError(TrapControlError):
    """State moments are not those of a thermal state at the given frequency."""


class WindowTooShortError(TrapControlError):
    """Analysis window does not cover the required number of secular periods."""


class DegenerateSamplesError(TrapControlError):
    """Phase-plane samples are collinear; no ellipse can be fit."""


class ConfigError(TrapControlError):
    """Run configuration failed schema validation."""
