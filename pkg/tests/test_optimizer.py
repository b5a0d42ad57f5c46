import numpy as np
import pytest

from sta_trapkit import (
    Protocol,
    ProtocolKind,
    SlewObjective,
    TrapPair,
    b_extended,
    b_minimal,
    linear_protocol,
    max_abs_omega_sq,
    max_slew,
    optimize_extra_coeffs,
    shortcut_protocol,
    slew_lower_bound,
    smooth_protocol,
    verify_boundary,
)

from conftest import AMU

PAIR = TrapPair(omega0=2 * np.pi * 3e6, omegaf=2 * np.pi * 1e6,
                tf=20e-9, mass=40 * AMU)

BASELINE_SLEW = 5.490381056766569e24  # minimal ansatz, 16001-point grid
A6_OPT = 2.220674514770508
RATIO_OPT = 0.7524893463724168


@pytest.fixture(scope="module")
def opt1():
    return optimize_extra_coeffs(SlewObjective(PAIR))


@pytest.fixture(scope="module")
def opt2():
    return optimize_extra_coeffs(SlewObjective(PAIR), n_extra=2)


def test_slew_lower_bound_value():
    expected = abs(PAIR.omega0**2 - PAIR.omegaf**2) / PAIR.tf
    assert slew_lower_bound(PAIR) == expected
    assert expected == pytest.approx(1.579136704174297e22, rel=1e-12)


def test_linear_ramp_attains_the_bound():
    assert max_slew(linear_protocol(PAIR)) == pytest.approx(
        slew_lower_bound(PAIR), rel=1e-12)


def test_all_schedules_respect_the_bound():
    bound = slew_lower_bound(PAIR)
    for prot in (shortcut_protocol(b_minimal(PAIR), PAIR),
                 linear_protocol(PAIR), smooth_protocol(PAIR)):
        assert max_slew(prot) >= bound * (1.0 - 1e-12)


def test_max_slew_finite_difference_fallback():
    ref = shortcut_protocol(b_minimal(PAIR), PAIR)
    stripped = Protocol(ProtocolKind.SHORTCUT, ref.omega_sq, ref.tf, {}, None)
    assert max_slew(stripped) == pytest.approx(max_slew(ref), rel=1e-4)


def test_baseline_slew_frozen_value():
    prot = shortcut_protocol(b_minimal(PAIR), PAIR)
    assert max_slew(prot) == pytest.approx(BASELINE_SLEW, rel=1e-9)


def test_max_abs_omega_sq_dominated_by_anticonfinement():
    prot = shortcut_protocol(b_minimal(PAIR), PAIR)
    assert max_abs_omega_sq(prot) == pytest.approx(9.812236710135632e15, rel=1e-4)


def test_single_coefficient_optimum(opt1):
    assert opt1.converged
    assert opt1.iterations > 0
    assert opt1.coefficients.keys() == {6}
    assert opt1.coefficients[6] == pytest.approx(A6_OPT, abs=1e-3)
    assert opt1.ratio == pytest.approx(RATIO_OPT, abs=1e-3)
    assert opt1.baseline_slew == pytest.approx(BASELINE_SLEW, rel=1e-9)
    assert opt1.optimized_slew == pytest.approx(opt1.ratio * opt1.baseline_slew, rel=1e-12)
    assert opt1.optimized_slew >= slew_lower_bound(PAIR)


def test_optimum_preserves_boundary_conditions(opt1):
    b = b_extended(PAIR, opt1.coefficients)
    assert verify_boundary(b, PAIR).max() < 1e-12
    # and the reported slew is really the schedule's grid max
    prot = shortcut_protocol(b, PAIR)
    assert max_slew(prot) == pytest.approx(opt1.optimized_slew, rel=1e-9)


def test_every_start_reaches_the_same_basin(opt1):
    assert len(opt1.starts) == 3
    finals = [f for (_, _, f, _, _) in opt1.starts]
    assert all(conv for (_, _, _, conv, _) in opt1.starts)
    assert max(finals) - min(finals) < 1e-6 * min(finals)
    assert min(finals) == pytest.approx(opt1.objective_value, rel=1e-12)


def test_two_coefficients_do_at_least_as_well(opt1, opt2):
    assert opt2.converged
    assert opt2.coefficients.keys() == {6, 7}
    assert opt2.ratio <= opt1.ratio + 1e-6
    b = b_extended(PAIR, opt2.coefficients)
    assert verify_boundary(b, PAIR).max() < 1e-12
    # warm start from the one-coefficient optimum is among the runs
    assert len(opt2.starts) == 4


def test_zero_extra_coefficients_is_identity():
    res = optimize_extra_coeffs(SlewObjective(PAIR), n_extra=0)
    assert res.converged
    assert res.coefficients == {}
    assert res.ratio == 1.0
    assert res.optimized_slew == res.baseline_slew


def test_optimize_is_deterministic(opt1):
    again = optimize_extra_coeffs(SlewObjective(PAIR))
    assert again.coefficients == opt1.coefficients
    assert again.ratio == opt1.ratio
    assert again.starts == opt1.starts


def test_objective_validation():
    with pytest.raises(ValueError):
        SlewObjective(PAIR, grid=500)
    with pytest.raises(ValueError):
        SlewObjective(PAIR, indices=(5,))
    with pytest.raises(ValueError):
        SlewObjective(PAIR, indices=(6, 6))
    with pytest.raises(ValueError):
        SlewObjective(PAIR, p=1.0)
    with pytest.raises(ValueError):
        optimize_extra_coeffs(SlewObjective(PAIR), n_extra=-1)
