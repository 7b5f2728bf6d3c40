import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import gamma

from flmtails import (
    LevyMeasure,
    Model,
    RegimeError,
    m_t_density,
    mathfrak_m,
    psi,
    psi_split,
    pushforward_oracle,
    symmetric_atoms,
    theta,
    two_sided_power,
)
from flmtails.charfn import psi_bruteforce

G34 = gamma(0.75)
C_H = 4 * G34**-4


def m_mass(m, t, g=lambda x: 1.0, breaks=()):
    """Integral of g * m_t over its support; the profile beyond 1e4 is below 1e-15."""
    chi = m.chi(t)
    edge = m.lambda_trunc * chi
    pts = sorted({edge, *[b for b in breaks if b > edge], *np.geomspace(2 * edge, 1e4, 12)})
    f = lambda x: g(x) * m_t_density(m, t, x)  # noqa: E731
    return sum(integrate.quad(f, a, b, epsabs=1e-15, epsrel=1e-12, limit=400)[0] for a, b in zip(pts, pts[1:]))


def test_psi_zero(sym_model):
    assert psi(sym_model, 1.0, 0.0) == 0j
    assert psi_split(sym_model, 1.0, 0.0) == (0j, 0j)


def test_psi_bruteforce(sym_model):
    exact = psi(sym_model, 1.0, 1.0)
    brute = psi_bruteforce(sym_model, 1.0, 1.0, tol=1e-7)
    assert abs(exact - brute) < 1e-6


def test_psi_bruteforce_asymmetric():
    m = Model(LevyMeasure([(1.0, 1.0), (-2.0, 0.5)]), 0.25)
    exact = psi(m, 1.5, 0.7)
    assert abs(exact - psi_bruteforce(m, 1.5, 0.7, tol=1e-7)) < 1e-6
    assert exact.imag != 0.0


ASYM = Model(LevyMeasure([(1.0, 1.0), (-2.0, 0.5)]), 0.25)


@settings(max_examples=10)
@given(st.floats(0.2, 5.0), st.floats(0.05, 30.0))
def test_psi_hermitian_and_bounded(t, z):
    a, b = psi(ASYM, t, z), psi(ASYM, t, -z)
    assert abs(a - b.conjugate()) <= 1e-12 * max(1.0, abs(a))
    assert a.real <= 1e-14


@settings(max_examples=10)
@given(st.floats(0.2, 5.0), st.floats(0.05, 30.0))
def test_psi_split_sum(t, z):
    p1, p2 = psi_split(ASYM, t, z)
    full = psi(ASYM, t, -z)
    assert abs(p1 + p2 - full) <= 1e-9 * max(1.0, abs(full))
    assert p2.real >= -2 * t * ASYM.Lambda - 1e-12


def test_profile_single_atom():
    m = Model(LevyMeasure([(1.0, 1.0)]), 0.25)
    r = np.array([1 / G34, 1.0, 3.0, 40.0])
    assert np.allclose(mathfrak_m(m, r), C_H * r**-5, rtol=1e-13)


def test_profile_negative_atom():
    m = Model(LevyMeasure([(-1.0, 1.0)]), 0.25)
    r = np.array([0.01, 0.5, 2.0, 100.0])
    got = mathfrak_m(m, r)
    assert np.all(got > 0)
    assert np.allclose(got, -m.kernel.ell(-r), rtol=1e-13)


def test_profile_regular_limit(sym_model):
    for r in (1e3, 1e4):
        assert r**5 * mathfrak_m(sym_model, r) / (2 * C_H) == pytest.approx(1.0, rel=0.1)


def test_profile_ex41_limit():
    # one-sided alpha = 1.5 family, mu_+(r) = r^-1.5
    from flmtails.asymptotics import phi_integral

    m = Model(two_sided_power(1.5, 0.0, 1.0), 0.25)
    r = 1e3
    pred = phi_integral(m.kernel, 1.5, 1)
    assert r * mathfrak_m(m, r) / r**-1.5 == pytest.approx(pred, rel=0.15)


@given(st.floats(1e-3, 1e6))
def test_profile_nonnegative(r):
    for m in (ASYM, Model(LevyMeasure([(-1.0, 1.0)]), 0.25)):
        assert mathfrak_m(m, r) > 0


def test_profile_long_memory_rejected():
    with pytest.raises(RegimeError):
        mathfrak_m(Model(symmetric_atoms(), 0.75), 1.0)


def test_m_t_cutoff_and_t1(sym_model):
    t = 2.0
    cut = sym_model.lambda_trunc * t ** (0.25 - 0.5)
    assert m_t_density(sym_model, t, 0.99 * cut) == 0.0
    x = np.array([1.2, 2.0, 7.0])
    assert np.array_equal(m_t_density(sym_model, 1.0, x), mathfrak_m(sym_model, x))
    assert m_t_density(sym_model, 1.0, 0.9) == 0.0


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0, 3.0])
def test_mass_identity(sym_model, t):
    assert m_mass(sym_model, t) == pytest.approx(t * sym_model.Lambda, rel=1e-8)


BATTERY = {
    "one": lambda x: np.ones_like(x),
    "exp": lambda x: np.exp(-np.abs(x)),
    "cos": lambda x: np.cos(3 * x),
    "indicator": lambda x: ((x > 1.5) & (x < 4.0)).astype(float),
    "poly": lambda x: np.where(np.abs(x) < 5, x**2 - x, 0.0),
}


@pytest.mark.parametrize("name", list(BATTERY))
def test_pushforward_oracle(sym_model, name):
    g = BATTERY[name]
    oracle = pushforward_oracle(sym_model, 1.0, g)
    direct = m_mass(sym_model, 1.0, lambda x: float(g(np.array([x]))[0]), breaks=(1.5, 4.0, 5.0))
    assert oracle == pytest.approx(direct, rel=1e-6)


def test_pushforward_examples(sym_model):
    assert pushforward_oracle(sym_model, 1.0, lambda x: np.ones_like(x)) == pytest.approx(sym_model.Lambda, rel=1e-9)
    cut = sym_model.lambda_trunc
    assert pushforward_oracle(sym_model, 1.0, lambda x: ((x > 0) & (x < cut)).astype(float)) == 0.0


def test_theta_basics():
    m = Model(LevyMeasure([(-1.0, 1.0)]), 0.25)
    assert theta(m, 1.0, 0.0) == 0.0
    assert theta(m, 1.0, -7.0) == pytest.approx(theta(m, 1.0, 7.0), rel=1e-14)
    ratios = [theta(m, 1.0, z) / math.log(z) for z in (1e2, 1e3, 1e4, 1e5, 1e6)]
    assert min(ratios) > 1.0


def test_lambda_scaling(sym_model):
    for t in (0.5, 2.0):
        assert sym_model.a(t) == pytest.approx(t**0.75 * sym_model.a1, rel=1e-15)
