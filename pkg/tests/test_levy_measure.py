import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flmtails import (
    DegenerateMeasureError,
    DivergenceError,
    DomainError,
    GaussianTailPiece,
    LevyMeasure,
    PowerPiece,
    TailRegime,
    check_existence,
    check_integral_conditions,
    classify_tail_regime,
    dyadic_example,
    moment_integral,
    symmetric_atoms,
    two_sided_power,
)
from flmtails.levy_measure import (
    ExpPowerPiece,
    check_exponential_moments,
    exp_moment_Mk,
    moment_by_doubling,
)


def pareto(alpha):
    """Density alpha |u|^{-alpha-1} on |u| >= 1."""
    return two_sided_power(alpha)


def builtin_battery():
    return [
        symmetric_atoms(),
        LevyMeasure([(1.0, 1.0)]),
        LevyMeasure([(-1.0, 1.0)]),
        pareto(1.5),
        two_sided_power(1.2, 0.5, 2.0),
        dyadic_example(0.25),
        LevyMeasure(pieces=[GaussianTailPiece(1.0, math.inf)]),
        LevyMeasure(pieces=[ExpPowerPiece(0.0, math.inf, 1.0, 0.5, 1.0)]),
        LevyMeasure(pieces=[PowerPiece(-1.0, 0.0, 1.0, 0.7), PowerPiece(0.0, 1.0, 1.0, 0.7)]),
    ]


# -- moment_integral ------------------------------------------------------
def test_moment_two_atoms():
    assert moment_integral(symmetric_atoms(), 4, "all").value == 2.0


def test_moment_pareto_closed_form():
    # one side of the two-sided family
    mu = LevyMeasure(pieces=[PowerPiece(1.0, math.inf, 1.5, 1.5)])
    r = moment_integral(mu, 0.8, "outer")
    assert r.value == pytest.approx(1.5 / 0.7, rel=1e-8)
    assert r.value == pytest.approx(2.142857, abs=1e-6)


def test_moment_divergence_flag():
    mu = LevyMeasure(pieces=[PowerPiece(1.0, math.inf, 1.5, 1.5)])
    r = moment_integral(mu, 4, "outer")
    assert not r.finite and r.value == math.inf


def test_moment_rejects_p0_near_infinite_activity():
    mu = LevyMeasure(pieces=[PowerPiece(0.0, 1.0, 1.0, 0.7)])
    with pytest.raises(DomainError):
        moment_integral(mu, 0.0, "inner")
    with pytest.raises(DomainError):
        moment_integral(mu, -1.0, "all")


@pytest.mark.parametrize("mu", builtin_battery(), ids=repr)
def test_levy_condition(mu):
    assert moment_integral(mu, 2, "inner").finite


@pytest.mark.parametrize("p", [0.3, 0.8, 1.0, 1.4])
@pytest.mark.parametrize("mu", [pareto(1.5), two_sided_power(1.2, 0.5, 2.0),
                                LevyMeasure(pieces=[GaussianTailPiece(1.0, math.inf)])], ids=repr)
def test_metadata_matches_doubling(mu, p):
    meta = moment_integral(mu, p, "outer")
    brute = moment_by_doubling(mu, p, "outer")
    if meta.finite and brute.finite:
        assert brute.value == pytest.approx(meta.value, rel=1e-6)


def test_doubling_flags_divergence():
    assert not moment_by_doubling(pareto(0.5), 1.0, "outer").finite


# -- existence and regimes --------------------------------------------------
def test_existence_examples():
    assert check_existence(dyadic_example(0.25), 0.25)
    assert check_existence(pareto(1.5), 0.25)
    assert not check_existence(pareto(0.5), 0.25)


def test_existence_degenerate():
    with pytest.raises(DegenerateMeasureError):
        check_existence(LevyMeasure(), 0.25)


def test_regime_examples():
    assert classify_tail_regime(symmetric_atoms(), 0.25) == TailRegime.REGULAR
    for H in (0.1, 0.25, 0.4):
        assert classify_tail_regime(dyadic_example(H), H) == TailRegime.EXTREMELY_HEAVY
    assert classify_tail_regime(pareto(1.5), 0.25) == TailRegime.EXTREMELY_HEAVY


def test_regime_needs_existence():
    with pytest.raises(DivergenceError):
        classify_tail_regime(pareto(0.5), 0.25)


# -- exponential moments -----------------------------------------------------
@pytest.mark.parametrize("C", [-50.0, -1.0, 0.0, 3.0, 100.0])
def test_exp_moments_bounded(C):
    assert check_exponential_moments(symmetric_atoms(), C)


def test_exp_moments_power_and_gaussian():
    assert not check_exponential_moments(pareto(1.5), 1.0)
    assert check_exponential_moments(LevyMeasure(pieces=[GaussianTailPiece(1.0, math.inf)]), 10.0)


def test_exp_moment_examples():
    one = LevyMeasure([(1.0, 1.0)])
    assert exp_moment_Mk(one, 2, 0.0) == 1.0
    assert exp_moment_Mk(one, 4, 2.0) == pytest.approx(math.e**2, rel=1e-14)
    assert exp_moment_Mk(symmetric_atoms(), 2, 1.0) == pytest.approx(math.e + 1 / math.e, rel=1e-14)
    with pytest.raises(DivergenceError):
        exp_moment_Mk(pareto(1.5), 2, 1.0)


GAUSS = LevyMeasure([(-0.5, 0.3)], [GaussianTailPiece(0.2, 4.0, 1.0, 1.5)])


@given(st.sampled_from([2, 4]), st.floats(-2.0, 2.0), st.floats(0.01, 1.0))
def test_exp_moment_increasing_even_k(k, xi, d):
    assert exp_moment_Mk(GAUSS, k, xi + d) > exp_moment_Mk(GAUSS, k, xi)


@given(st.integers(2, 5), st.floats(-2.0, 2.0))
def test_exp_moment_derivative(k, xi):
    h = 1e-4
    fd = (exp_moment_Mk(GAUSS, k, xi + h) - exp_moment_Mk(GAUSS, k, xi - h)) / (2 * h)
    assert fd == pytest.approx(exp_moment_Mk(GAUSS, k + 1, xi), rel=1e-6)


# -- integral conditions ------------------------------------------------------
def test_integral_conditions_atom():
    rep = check_integral_conditions(LevyMeasure([(1.0, 1.0)]), 0.25)
    assert rep.I1.finite and rep.I2.finite


def test_integral_conditions_alpha_half():
    rep = check_integral_conditions(pareto(0.5), 0.25)
    assert not rep.I1.finite
    assert not rep.parts["I13"].finite


def test_integral_conditions_zero():
    with pytest.raises(DegenerateMeasureError):
        check_integral_conditions(LevyMeasure(), 0.25)


@pytest.mark.parametrize("H", [0.25, 0.75])
@pytest.mark.parametrize("mu", [symmetric_atoms(), pareto(1.5), pareto(0.5), dyadic_example(0.25),
                                two_sided_power(0.6)], ids=repr)
def test_existence_matches_integral_conditions(mu, H):
    assert check_existence(mu, H) == check_integral_conditions(mu, H).finite


# -- representation -----------------------------------------------------------
@pytest.mark.parametrize("mu", builtin_battery(), ids=repr)
def test_dict_round_trip(mu):
    assert LevyMeasure.from_dict(mu.to_dict()) == mu


def test_invalid_atoms():
    with pytest.raises(DomainError):
        LevyMeasure([(0.0, 1.0)])
    with pytest.raises(DomainError):
        LevyMeasure([(1.0, -1.0)])
    with pytest.raises(DomainError):
        LevyMeasure.from_dict({"atoms": [[1.0]]})
    with pytest.raises(DomainError):
        LevyMeasure.from_dict({"atoms": [], "density": []})


def test_power_piece_mass_above():
    p = PowerPiece(1.0, math.inf, 1.5, 1.5)
    mu = LevyMeasure(pieces=[p])
    for r in (1.0, 3.0, 40.0):
        assert p.mass_above(r) == pytest.approx(r**-1.5, rel=1e-14)
        assert mu.tail_mass(r, 1) == pytest.approx(r**-1.5, rel=1e-7)


def test_dyadic_atoms():
    mu = dyadic_example(0.25)
    locs, ms = mu.all_atoms(1024.0)
    pos = locs > 0
    k = np.log2(locs[pos])
    assert np.allclose(k, np.round(k))
    assert np.allclose(ms[pos], 2.0 ** (k - 4 * k))
    assert (-1.0 in locs) and ms[locs == -1.0][0] == 1.0


def test_reflected():
    mu = two_sided_power(1.2, 0.5, 2.0)
    r = mu.reflected()
    assert r.tail_mass(5.0, -1) == pytest.approx(mu.tail_mass(5.0, 1), rel=1e-10)
