import math

import numpy as np
import pytest
from scipy import integrate

from flmtails import (
    DomainError,
    LevyMeasure,
    Model,
    Regime,
    RegimeError,
    compare,
    density_fourier,
    dyadic_example,
    ex41_asymptote,
    mathfrak_m,
    symmetric_atoms,
    thm21_asymptote,
    thm22_heavy_asymptote,
    thm22_regular_asymptote,
    two_sided_power,
)
from flmtails.asymptotics import (
    auto_regime,
    explore_joint_limit,
    phi_integral,
    phi_integral_closed_form,
    profile_shift_check,
)
from flmtails.saddle import solve_saddle

POWER = Model(two_sided_power(1.5), 0.25)
EX41 = (1.5, 1.0, 1.0)


def test_regular_constant(sym_model):
    assert thm22_regular_asymptote(sym_model, 1.0) == pytest.approx(3.547772, abs=2e-5)
    x = np.array([10.0, 100.0])
    assert np.allclose(thm22_regular_asymptote(sym_model, x), thm22_regular_asymptote(sym_model, 1.0) * x**-5)


def test_regular_t_independence(sym_model):
    x = np.array([100.0])
    r1 = density_fourier(sym_model, 1.0, x)[0][0]
    r2 = density_fourier(sym_model, 2.0, x)[0][0]
    assert r2 / r1 == pytest.approx(1.0, rel=0.1)


def test_regime_gating(sym_model):
    with pytest.raises(RegimeError):
        thm22_regular_asymptote(POWER, 10.0)
    with pytest.raises(RegimeError):
        thm22_heavy_asymptote(sym_model, 1.0, 10.0)
    with pytest.raises(RegimeError):
        thm21_asymptote(sym_model, 1.0, 10.0)
    with pytest.raises(RegimeError):
        thm22_regular_asymptote(Model(symmetric_atoms(), 0.75), 10.0)
    with pytest.raises(DomainError):
        thm22_regular_asymptote(Model(LevyMeasure([(1.0, 1.0)]), 0.25), 10.0)


def test_heavy_t1_is_profile():
    x = np.array([5.0, 50.0, 500.0])
    assert np.array_equal(thm22_heavy_asymptote(POWER, 1.0, x), mathfrak_m(POWER, x))


def test_heavy_vs_ex41_form():
    x, t = 1e3, 2.0
    heavy = thm22_heavy_asymptote(POWER, t, x)
    ex = ex41_asymptote(POWER, t, x, *EX41)
    assert heavy / ex == pytest.approx(1.0, rel=0.15)
    assert thm22_heavy_asymptote(POWER, 1.0, x) / ex41_asymptote(POWER, 1.0, x, *EX41) == pytest.approx(1.0, rel=0.15)


def test_heavy_vs_exact():
    x = np.array([100.0])
    exact = density_fourier(POWER, 1.0, x)[0][0]
    assert 0.7 <= exact / thm22_heavy_asymptote(POWER, 1.0, 100.0) <= 1.4


def test_phi_integral_positive_side():
    k = POWER.kernel
    G = k.gamma_const
    # brute force in z directly: Phi vanishes above Gamma(H + 1/2)
    f = lambda z: float(k.ell(1 / z)) / z * 1.5 * z**-2.5  # noqa: E731
    brute = sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=500)[0]
                for a, b in ((1e-12, 1e-6), (1e-6, 1e-2), (1e-2, G)))
    assert phi_integral(k, 1.5, 1) == pytest.approx(brute, rel=1e-8)
    assert phi_integral(k, 1.5, 1) == pytest.approx(phi_integral_closed_form(k, 1.5), rel=1e-8)


def test_phi_integral_negative_side():
    k = POWER.kernel
    # Phi(-z) = -ell(-1/z) / z is positive because ell < 0 on the negative branch
    f = lambda z: -float(k.ell(-1 / z)) / z * 1.5 * z**-2.5  # noqa: E731
    edges = np.geomspace(1e-12, 1e12, 49)
    brute = sum(integrate.quad(f, a, b, epsabs=0, epsrel=1e-12, limit=500)[0] for a, b in zip(edges, edges[1:]))
    got = phi_integral(k, 1.5, -1)
    assert got > 0
    assert got == pytest.approx(brute, rel=1e-7)


def test_ex41_t_exponent():
    a1 = ex41_asymptote(POWER, 1.0, 1e3, *EX41)
    a2 = ex41_asymptote(POWER, 2.0, 1e3, *EX41)
    assert a2 / a1 == pytest.approx(2**0.625, rel=1e-13)


@pytest.mark.parametrize("alpha", [0.8, 4.0, 0.5])
def test_ex41_alpha_range(alpha):
    with pytest.raises(DomainError):
        ex41_asymptote(POWER, 1.0, 10.0, alpha, 1.0, 1.0)


def test_thm21_against_exact():
    m = Model(LevyMeasure([(1.0, 1.0)]), 0.75)
    t = 5.0
    ratios = []
    for y in (5.0, 10.0, 20.0):
        x = y * t**1.25
        r = solve_saddle(m, t, x)
        assert r.D < 0 and r.K > 0
        exact = density_fourier(m, t, np.array([x]))[0][0]
        ratios.append(exact / thm21_asymptote(m, t, x))
    assert 0.75 <= ratios[1] <= 1.33
    dev = np.abs(np.array(ratios) - 1)
    assert np.all(np.diff(dev) < 0)


def test_compare_rows(sym_model):
    empty = compare(sym_model, Regime.THM22_II, [])
    assert empty.rows == []
    rep = compare(sym_model, "Thm22_ii", [(1.0, 50.0)])
    row = rep.rows[0]
    assert row["ratio"] == row["exact"] / row["asymptote"]
    assert rep.to_csv().splitlines()[0] == "t,x,exact,asymptote,ratio,err"
    with pytest.raises(RegimeError):
        compare(sym_model, Regime.THM22_I, [(1.0, 50.0)])


def test_auto_regime(sym_model):
    assert auto_regime(sym_model) == Regime.THM22_II
    assert auto_regime(POWER) == Regime.THM22_I
    assert auto_regime(Model(symmetric_atoms(), 0.75)) == Regime.THM21


def test_joint_limit_label():
    rep = explore_joint_limit(POWER, [(1.0, 200.0)], EX41)
    assert rep.label == "conjectured, unproven"


def test_profile_shift_check():
    _, dyadic = profile_shift_check(Model(dyadic_example(0.25), 0.25))
    _, power = profile_shift_check(POWER)
    assert dyadic and not power
