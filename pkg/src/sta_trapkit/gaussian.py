"""Single-mode Gaussian states, their overlaps and their energetics.

A Gaussian state of one motional mode is fixed by the five moments

    X1 = <q>, X2 = <p>, X3 = <q^2>, X4 = <p^2>, X5 = <qp + pq>

(SI units) plus the particle mass.  The equivalent mean/covariance picture is

    mean = (X1, X2),  V = [[X3 - X1^2,      X5/2 - X1 X2],
                           [X5/2 - X1 X2,   X4 - X2^2   ]].

Fidelity between two such states follows the closed single-mode form.  With
sigma = 2V/hbar, Delta = det(sigma1 + sigma2) and
Lambda = (det sigma1 - 1)(det sigma2 - 1),

    F0^2 = 2 / (sqrt(Delta + Lambda) - sqrt(Lambda)),
    F = F0 exp(-(1/4) delta^T (V1 + V2)^{-1} delta),  delta = mean1 - mean2,

the square-root (Uhlmann) convention, so F(vacuum, thermal n) = 1/sqrt(1+n).

fidelity_fock_oracle recomputes the same overlap by building the two density
matrices in a truncated number basis and evaluating Tr sqrt(sqrt(r1) r2
sqrt(r1)) directly.  It shares no formulas with the closed form beyond the
state moments, which makes it a genuine cross-check.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import (FidelityConditioningError, FockTruncationError,
                     InvalidStateError, NotThermalError)

HBAR = 1.054571817e-34  # J s
KB = 1.380649e-23       # J / K

_PURITY_SLACK = 1e-9


def ground_length(omega: float, mass: float) -> float:
    """l0 = sqrt(hbar / (2 m omega)), the vacuum position spread."""
    return math.sqrt(HBAR / (2.0 * mass * omega))


def ground_momentum(omega: float, mass: float) -> float:
    """k0 = sqrt(m hbar omega / 2), the vacuum momentum spread."""
    return math.sqrt(mass * HBAR * omega / 2.0)


@dataclass(frozen=True)
class GaussianState:
    """Raw moments of one radial mode, SI units.

    x1 (m), x2 (kg m/s), x3 (m^2), x4 ((kg m/s)^2), x5 (J s), mass (kg).
    x3 and x4 are raw (not central) second moments; x5 is the symmetrized
    cross moment <qp + pq>.  Construction rejects moment sets whose central
    covariance is not positive definite or beats the uncertainty principle
    by more than rounding.
    """

    x1: float
    x2: float
    x3: float
    x4: float
    x5: float
    mass: float

    def __post_init__(self):
        if not self.mass > 0.0:
            raise InvalidStateError("mass must be positive")
        if not (self.var_q > 0.0 and self.var_p > 0.0):
            raise InvalidStateError("variances must be positive")
        d = self.det_v
        if d <= 0.0:
            raise InvalidStateError("covariance matrix must be positive definite")
        if d < (HBAR / 2.0) ** 2 * (1.0 - _PURITY_SLACK):
            raise InvalidStateError(
                f"uncertainty product {d:.6e} below (hbar/2)^2 = {(HBAR / 2) ** 2:.6e}")

    @property
    def var_q(self) -> float:
        return self.x3 - self.x1**2

    @property
    def var_p(self) -> float:
        return self.x4 - self.x2**2

    @property
    def cov_qp(self) -> float:
        return 0.5 * self.x5 - self.x1 * self.x2

    @property
    def det_v(self) -> float:
        return self.var_q * self.var_p - self.cov_qp**2

    @property
    def mean(self) -> np.ndarray:
        return np.array([self.x1, self.x2])

    @property
    def moments(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3, self.x4, self.x5])

    @property
    def purity(self) -> float:
        """Tr rho^2 = (hbar/2) / sqrt(det V)."""
        return (HBAR / 2.0) / math.sqrt(self.det_v)

    @staticmethod
    def from_moments(x, mass: float) -> "GaussianState":
        x = np.asarray(x, dtype=float)
        return GaussianState(x[0], x[1], x[2], x[3], x[4], mass)

    @staticmethod
    def from_covariance(mean, v, mass: float) -> "GaussianState":
        """Inverse of covariance(): rebuild raw moments from mean and V."""
        mq, mp = float(mean[0]), float(mean[1])
        v = np.asarray(v, dtype=float)
        return GaussianState(mq, mp, v[0, 0] + mq * mq, v[1, 1] + mp * mp,
                             2.0 * v[0, 1] + 2.0 * mq * mp, mass)


@dataclass(frozen=True)
class CovarianceForm:
    """Mean vector and central covariance matrix of one mode."""

    mean: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "v", v)
        if abs(v[0, 1] - v[1, 0]) > 1e-12 * math.sqrt(abs(v[0, 0] * v[1, 1])):
            raise InvalidStateError("covariance matrix must be symmetric")
        d = np.linalg.det(v)
        if v[0, 0] <= 0.0 or d <= 0.0:
            raise InvalidStateError("covariance matrix must be positive definite")
        if d < (HBAR / 2.0) ** 2 * (1.0 - _PURITY_SLACK):
            raise InvalidStateError("uncertainty product below hbar^2/4")

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.v))


def covariance(state: GaussianState) -> CovarianceForm:
    v = np.array([[state.var_q, state.cov_qp], [state.cov_qp, state.var_p]])
    return CovarianceForm(mean=state.mean, v=v)


def thermal_state(omega: float, temperature: float, mass: float) -> GaussianState:
    """Thermal equilibrium of a static trap at the given temperature (K).

    X3 = l0^2 coth(hbar omega / 2 kB T), X4 = k0^2 coth(...), zero means;
    temperature = 0 gives the ground state.
    """
    if temperature < 0.0:
        raise InvalidStateError("temperature must be nonnegative")
    c = 1.0 if temperature == 0.0 else 1.0 / math.tanh(HBAR * omega / (2.0 * KB * temperature))
    return GaussianState(0.0, 0.0,
                         ground_length(omega, mass) ** 2 * c,
                         ground_momentum(omega, mass) ** 2 * c,
                         0.0, mass)


def thermal_occupation(omega: float, temperature: float) -> float:
    """Bose-Einstein mean phonon number."""
    if temperature == 0.0:
        return 0.0
    return 1.0 / math.expm1(HBAR * omega / (KB * temperature))


def coherent_state(omega: float, alpha: complex, mass: float) -> GaussianState:
    """Displaced ground state: X1 = 2 l0 Re alpha, X2 = 2 k0 Im alpha,
    X3 = X1^2 + l0^2, X4 = X2^2 + k0^2, X5 = 4 hbar Re alpha Im alpha."""
    alpha = complex(alpha)
    l0 = ground_length(omega, mass)
    k0 = ground_momentum(omega, mass)
    x1 = 2.0 * l0 * alpha.real
    x2 = 2.0 * k0 * alpha.imag
    return GaussianState(x1, x2, x1 * x1 + l0 * l0, x2 * x2 + k0 * k0,
                         4.0 * HBAR * alpha.real * alpha.imag, mass)


def target_thermal(pair, temperature0: float) -> GaussianState:
    """Ideal endpoint of a frictionless sweep from a thermal state.

    The frictionless map sends thermal at (omega0, T0) to thermal at
    (omegaf, T0 omegaf/omega0): occupation is preserved, so the inverse
    temperature scales as beta_f = gamma^2 beta_0.
    """
    return thermal_state(pair.omegaf, temperature0 * pair.omegaf / pair.omega0, pair.mass)


def target_coherent(pair, alpha0: complex, g: float) -> GaussianState:
    """Ideal endpoint for a coherent state: amplitude preserved, phase
    advanced by the inverse-square time integral g of the scaling function,
    alpha_f = alpha0 exp(-i g omega0)."""
    alpha0 = complex(alpha0)
    alpha_f = alpha0 * complex(math.cos(g * pair.omega0), -math.sin(g * pair.omega0))
    return coherent_state(pair.omegaf, alpha_f, pair.mass)


def mean_energy(state: GaussianState, omega_sq: float) -> float:
    """<H> = X4/2m + m omega^2 X3/2 at the instantaneous curvature.

    omega_sq may be negative (anti-confining instant); the value is then the
    instantaneous <H(t)>, not a confined-mode energy.
    """
    return state.x4 / (2.0 * state.mass) + 0.5 * state.mass * omega_sq * state.x3


def effective_temperature(state: GaussianState, omega: float,
                          shape_rtol: float = 1e-6) -> float:
    """Temperature of the thermal state matching a thermal-shaped one.

    The state must be zero-mean with X3/l0^2 = X4/k0^2 (within shape_rtol)
    and negligible cross moment, else NotThermalError.  The coth factor from
    X3 maps to T = hbar omega / (2 kB atanh(1/c)); a factor within rounding
    of 1 means the state is the ground state, which any T well below
    hbar omega/kB would reproduce: flagged with a warning, returns 0.0.
    """
    l0sq = ground_length(omega, state.mass) ** 2
    k0sq = ground_momentum(omega, state.mass) ** 2
    cq = state.x3 / l0sq
    cp = state.x4 / k0sq
    if state.x1**2 > shape_rtol * state.x3 or state.x2**2 > shape_rtol * state.x4:
        raise NotThermalError("state has nonzero mean displacement")
    if abs(cq - cp) > shape_rtol * max(cq, cp):
        raise NotThermalError(
            f"second moments not isotropic in trap units: {cq:.9g} vs {cp:.9g}")
    if abs(state.x5) > shape_rtol * 2.0 * math.sqrt(state.x3 * state.x4):
        raise NotThermalError("state has a nonzero symmetrized cross moment")
    c = cq
    if c <= 1.0 + 1e-12:
        warnings.warn("state is the ground state to working precision; returning T = 0")
        return 0.0
    return HBAR * omega / (2.0 * KB * math.atanh(1.0 / c))


def wigner_at(state: GaussianState, q, p):
    """Wigner density W(q, p) of the state (normalized to 1).

    W = exp(-(1/2) d^T V^{-1} d) / (2 pi sqrt(det V)), d = (q - X1, p - X2).
    The exponent is negative definite; a Gaussian is not normalizable
    otherwise.
    """
    c = covariance(state)
    vi = np.linalg.inv(c.v)
    dq = np.asarray(q, dtype=float) - state.x1
    dp = np.asarray(p, dtype=float) - state.x2
    quad = vi[0, 0] * dq**2 + 2.0 * vi[0, 1] * dq * dp + vi[1, 1] * dp**2
    return np.exp(-0.5 * quad) / (2.0 * math.pi * math.sqrt(state.det_v))


def _check_same_mass(s1: GaussianState, s2: GaussianState):
    if abs(s1.mass - s2.mass) > 1e-12 * s1.mass:
        raise InvalidStateError("states must share the same mass")


def fidelity(s1: GaussianState, s2: GaussianState) -> float:
    """Uhlmann fidelity of two single-mode Gaussian states (closed form)."""
    _check_same_mass(s1, s2)
    v1 = covariance(s1).v
    v2 = covariance(s2).v
    sig1 = 2.0 * v1 / HBAR
    sig2 = 2.0 * v2 / HBAR
    delta_det = np.linalg.det(sig1 + sig2)
    # purities can undershoot 1 by rounding; clip so Lambda stays physical
    lam = max(np.linalg.det(sig1) - 1.0, 0.0) * max(np.linalg.det(sig2) - 1.0, 0.0)
    root = math.sqrt(delta_det + lam) - math.sqrt(lam)
    if root <= 0.0:
        raise FidelityConditioningError("covariance combination is numerically degenerate")
    f0 = math.sqrt(2.0 / root)
    d = s1.mean - s2.mean
    vsum = v1 + v2
    if np.linalg.det(vsum) <= 0.0:
        raise FidelityConditioningError("V1 + V2 is not positive definite")
    arg = 0.25 * float(d @ np.linalg.solve(vsum, d))
    return min(f0 * math.exp(-arg), 1.0)


def log_infidelity(s1: GaussianState, s2: GaussianState, floor: float = 1e-16) -> float:
    """log10(1 - F), floored so perfect transfers plot at the floor."""
    return math.log10(max(1.0 - fidelity(s1, s2), floor))


# -- truncated number-basis oracle -------------------------------------------

def _williamson_single(sigma: np.ndarray):
    """Decompose a 2x2 dimensionless covariance (vacuum = identity) as
    thermal + squeeze + rotate.

    Returns (nbar, r, theta) with sigma = R(theta) diag(nu e^{-2r},
    nu e^{2r}) R(theta)^T, nu = 2 nbar + 1.  Eigenvector ordering is fixed
    so the rotation has determinant +1.
    """
    ev, vec = np.linalg.eigh(sigma)
    if ev[0] <= 0.0:
        raise InvalidStateError("covariance not positive definite")
    nu = math.sqrt(ev[0] * ev[1])
    nbar = max(0.5 * (nu - 1.0), 0.0)
    r = 0.25 * math.log(ev[1] / ev[0])
    if np.linalg.det(vec) < 0.0:
        vec = vec[:, ::-1]
        r = -r
    theta = math.atan2(vec[1, 0], vec[0, 0])
    return nbar, r, theta


def _tr(a: np.ndarray, rho: np.ndarray) -> float:
    """Re Tr(a rho) without forming the product matrix."""
    return float(np.einsum("ij,ji->", a, rho).real)


def _sigma_ref(state: GaussianState, omega_ref: float) -> np.ndarray:
    """Covariance in the reference oscillator's units (its vacuum -> identity)."""
    l0 = ground_length(omega_ref, state.mass)
    k0 = ground_momentum(omega_ref, state.mass)
    return np.array([
        [state.var_q / l0**2, state.cov_qp / (l0 * k0)],
        [state.cov_qp / (l0 * k0), state.var_p / k0**2],
    ])


def _fock_build(state: GaussianState, omega_ref: float, n_max: int) -> np.ndarray:
    """Density matrix of a Gaussian state in the number basis of the
    reference oscillator, from its Williamson parameters."""
    l0 = ground_length(omega_ref, state.mass)
    k0 = ground_momentum(omega_ref, state.mass)
    nbar, r, theta = _williamson_single(_sigma_ref(state, omega_ref))
    alpha = complex(state.x1 / (2.0 * l0), state.x2 / (2.0 * k0))

    dim = n_max + 1
    n = np.arange(dim)
    a = np.diag(np.sqrt(n[1:].astype(float)), 1)
    ad = a.T.conj()

    psi = None
    if nbar < 1e-14 and abs(r) < 1e-14:
        # pure coherent state: build the amplitude vector analytically
        if alpha == 0.0:
            psi = np.zeros(dim, dtype=complex)
            psi[0] = 1.0
        else:
            log_fact = np.concatenate(([0.0], np.cumsum(np.log(n[1:]))))
            amp = np.exp(n * math.log(abs(alpha)) - 0.5 * abs(alpha) ** 2 - 0.5 * log_fact)
            psi = amp * np.exp(1j * n * np.angle(alpha))
        rho = np.outer(psi, psi.conj())
    elif nbar < 1e-14:
        # pure squeezed state: stay rank one, apply the unitaries to a vector
        psi = np.zeros(dim, dtype=complex)
        psi[0] = 1.0
        psi = expm(0.5 * r * (a @ a - ad @ ad)) @ psi
        if abs(theta) > 1e-14:
            psi = np.exp(1j * theta * n) * psi
        if alpha != 0.0:
            psi = expm(alpha * ad - np.conj(alpha) * a) @ psi
        psi /= np.linalg.norm(psi)
        rho = np.outer(psi, psi.conj())
    else:
        frac = nbar / (1.0 + nbar)
        pops = (1.0 - frac) * frac**n
        rho = np.diag(pops / pops.sum()).astype(complex)
        if abs(r) > 1e-14:
            s_op = expm(0.5 * r * (a @ a - ad @ ad))
            rho = s_op @ rho @ s_op.conj().T
        if abs(theta) > 1e-14:
            rot = np.exp(1j * theta * n)
            rho = rho * np.outer(rot, rot.conj())
        if alpha != 0.0:
            d_op = expm(alpha * ad - np.conj(alpha) * a)
            rho = d_op @ rho @ d_op.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real

    # moment self-check: the truncation must not have distorted the state.
    # The quadrature operators are banded, so build them from the ladder
    # identities instead of dense products.
    band1 = np.sqrt(n[1:].astype(float))
    band2 = np.sqrt((n[:-2] + 1.0) * (n[:-2] + 2.0))
    d1 = np.diag(band1, 1)
    d2 = np.diag(band2, 2)
    num = np.diag(2.0 * n + 1.0)
    q_op = l0 * (d1 + d1.T)
    p_op = 1j * k0 * (d1.T - d1)
    q2_op = l0**2 * (d2 + d2.T + num)
    p2_op = k0**2 * (num - d2 - d2.T)
    qp_sym = 1j * l0 * k0 * (d2.T - d2)
    mq = _tr(q_op, rho)
    mp = _tr(p_op, rho)
    vq = _tr(q2_op, rho) - mq**2
    vp = _tr(p2_op, rho) - mp**2
    cqp = _tr(qp_sym, rho) - mq * mp
    err = max(
        abs(mq - state.x1) / math.sqrt(state.var_q),
        abs(mp - state.x2) / math.sqrt(state.var_p),
        abs(vq - state.var_q) / state.var_q,
        abs(vp - state.var_p) / state.var_p,
        abs(cqp - state.cov_qp) / math.sqrt(state.var_q * state.var_p),
    )
    if err > 1e-6:
        raise FockTruncationError(
            f"truncated basis misses the target moments by {err:.2e}; raise n_max")
    return rho, psi


def _sqrtm_psd(rho: np.ndarray) -> np.ndarray:
    diag = np.diagonal(rho)
    if np.allclose(rho, np.diag(diag), atol=1e-15):
        return np.diag(np.sqrt(np.clip(diag.real, 0.0, None)).astype(complex))
    ev, vec = np.linalg.eigh(rho)
    ev = np.clip(ev, 0.0, None)
    return (vec * np.sqrt(ev)) @ vec.conj().T


def default_n_max(s1: GaussianState, s2: GaussianState, omega_ref: float) -> int:
    """Truncation just beyond the occupation either state reaches."""
    need = 0.0
    for s in (s1, s2):
        nbar, r, _ = _williamson_single(_sigma_ref(s, omega_ref))
        l0 = ground_length(omega_ref, s.mass)
        k0 = ground_momentum(omega_ref, s.mass)
        amp2 = (s.x1 / (2.0 * l0)) ** 2 + (s.x2 / (2.0 * k0)) ** 2
        need += nbar * math.exp(2.0 * abs(r)) + amp2
    return max(50, math.ceil(20.0 * (need + 1.0)))


def fidelity_fock_oracle(s1: GaussianState, s2: GaussianState,
                         n_max: int | None = None,
                         omega_ref: float | None = None) -> float:
    """Uhlmann fidelity via explicit density matrices in a number basis.

    Slow but formula-independent.  omega_ref fixes the basis oscillator; the
    default balances the two states' squeezing against it.  Each density
    matrix is verified to reproduce its target moments (FockTruncationError
    otherwise), so an insufficient n_max cannot silently pass.
    """
    _check_same_mass(s1, s2)
    if omega_ref is None:
        omega_ref = math.sqrt(math.sqrt(
            (s1.var_p * s2.var_p) / (s1.var_q * s2.var_q))) / s1.mass
    if n_max is None:
        n_max = default_n_max(s1, s2, omega_ref)
    r1, p1 = _fock_build(s1, omega_ref, n_max)
    r2, p2 = _fock_build(s2, omega_ref, n_max)
    # rank-one states admit exact overlap forms, free of eigensolver noise
    if p1 is not None and p2 is not None:
        return float(abs(np.vdot(p1, p2)))
    if p1 is not None or p2 is not None:
        psi, rho = (p1, r2) if p1 is not None else (p2, r1)
        return math.sqrt(max(float(np.real(np.vdot(psi, rho @ psi))), 0.0))
    d1 = np.diagonal(r1)
    d2 = np.diagonal(r2)
    if np.allclose(r1, np.diag(d1), atol=1e-15) and np.allclose(r2, np.diag(d2), atol=1e-15):
        # commuting (number-diagonal) states: classical overlap of spectra
        return float(np.sum(np.sqrt(np.clip(d1.real, 0.0, None) * np.clip(d2.real, 0.0, None))))
    sq = _sqrtm_psd(r1)
    inner = sq @ r2 @ sq
    ev = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    return float(np.sum(np.sqrt(np.clip(ev, 0.0, None))))
