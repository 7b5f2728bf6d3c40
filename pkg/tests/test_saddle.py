import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from flmtails import DomainError, LevyMeasure, Model, SaddleError, solve_saddle, two_sided_power
from flmtails.saddle import m_k, m_k_quadrature, saddle_asymptote_check, solve_saddle_scaled, x_boundary

NEG = Model(LevyMeasure([(-1.0, 1.0)]), 0.25, lambda_trunc=1.0)
LONG = Model(LevyMeasure([(1.0, 1.0)]), 0.75)
MODELS = [NEG, LONG]


@pytest.mark.parametrize("m", MODELS, ids=["truncated", "long-memory"])
@pytest.mark.parametrize("t", [0.3, 1.0, 4.0])
@pytest.mark.parametrize("xi", [0.01, 1.0, 30.0])
def test_m2_positive(m, t, xi):
    assert m_k(m, t, 2, xi) > 0


@pytest.mark.parametrize("m", MODELS, ids=["truncated", "long-memory"])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_m_k_scaling(m, k):
    for t, xi in ((0.4, 2.0), (3.0, 0.7)):
        chi = t ** (m.H - 0.5)
        assert m_k(m, t, k, xi) == pytest.approx(chi**k * t * m_k(m, 1.0, k, chi * xi), rel=1e-9)


@pytest.mark.parametrize("xi", [0.5, 3.0, 12.0])
def test_m1_two_ways(xi):
    assert m_k(NEG, 1.0, 1, xi) == pytest.approx(m_k_quadrature(NEG, 1.0, 1, xi), rel=1e-6)


@pytest.mark.parametrize("k", [1, 2, 4])
def test_m_k_two_ways_long_memory(k):
    assert m_k(LONG, 2.0, k, 0.8) == pytest.approx(m_k_quadrature(LONG, 2.0, k, 0.8), rel=1e-6)


@pytest.mark.parametrize("m", MODELS, ids=["truncated", "long-memory"])
def test_m1_increasing(m):
    vals = [m_k(m, 1.0, 1, xi) for xi in np.linspace(0.01, 20.0, 60)]
    assert np.all(np.diff(vals) > 0)


@pytest.mark.parametrize("m", MODELS, ids=["truncated", "long-memory"])
@pytest.mark.parametrize("k", [1, 2, 3])
def test_m_k_derivative(m, k):
    for xi in (0.5, 2.0, 6.0):
        h = 1e-4 * xi
        fd = (m_k(m, 1.0, k, xi + h) - m_k(m, 1.0, k, xi - h)) / (2 * h)
        assert fd == pytest.approx(m_k(m, 1.0, k + 1, xi), rel=1e-5)


def test_boundary():
    xt = x_boundary(NEG, 1.0)
    with pytest.raises(SaddleError):
        solve_saddle(NEG, 1.0, xt)
    with pytest.raises(SaddleError):
        solve_saddle(NEG, 1.0, xt - 1.0)
    near = solve_saddle(NEG, 1.0, xt + 1e-6 * max(1.0, abs(xt)))
    far = solve_saddle(NEG, 1.0, xt + 1.0)
    assert 0 < near.xi < 1e-3 < far.xi


@settings(max_examples=8)
@given(st.floats(0.2, 5.0), st.floats(0.5, 200.0))
def test_solution_properties(t, dx):
    x = x_boundary(NEG, t) + dx
    r = solve_saddle(NEG, t, x)
    assert r.residual <= 1e-10 * max(1.0, abs(x))
    assert r.K > 0 and r.x_t < x
    chi = t ** (NEG.H - 0.5)
    zeta = solve_saddle_scaled(NEG, t, x / chi)
    assert r.xi == pytest.approx(zeta / chi, rel=1e-8)


def test_uniqueness_random_brackets():
    x = x_boundary(NEG, 1.0) + 40.0
    xi = solve_saddle(NEG, 1.0, x).xi
    rng = np.random.default_rng(5)
    for _ in range(10):
        a = xi * rng.uniform(1e-3, 0.99)
        b = xi * rng.uniform(1.01, 50.0)
        root = brentq(lambda s: m_k(NEG, 1.0, 1, s) - x, a, b, xtol=1e-15, rtol=1e-14)
        assert root == pytest.approx(xi, rel=1e-9)


def test_zeta_trend():
    chk = saddle_asymptote_check(NEG, [1e3, 1e4, 1e5, 1e6])
    z = chk.ratios("zeta_ratio")
    assert np.all(np.diff(z) < 0) and np.all(z > 1.0)
    d = chk.ratios("D_ratio")
    assert np.all(np.diff(d) < 0)


def test_zeta_ratio_stated_tolerance():
    z = saddle_asymptote_check(NEG, [1e6]).ratios("zeta_ratio")[0]
    assert abs(z - 1.0) <= 0.2, f"zeta lambda / ln x = {z:.4f} at x = 1e6"


def test_toin_ratios_stated_tolerance():
    chk = saddle_asymptote_check(NEG, [1e3, 1e4, 1e5, 1e6])
    assert abs(chk.ratios("M2_ratio")[-1] - 1.0) <= 0.25
    d = chk.ratios("D_ratio")[-1]
    assert abs(d - 1.0) <= 0.25, f"D(x) / (-x ln x / lambda) = {d:.4f} at x = 1e6"


def test_check_report_rows():
    one = saddle_asymptote_check(NEG, [500.0])
    assert len(one.rows) == 1 and one.rows[0]["valid"]
    flagged = saddle_asymptote_check(NEG, [x_boundary(NEG) - 1.0, 500.0])
    assert [r["valid"] for r in flagged.rows] == [False, True]


def test_star_trend():
    # an atom at -1 reaches lambda = 1 exactly; M_k(zeta) outgrows e^{zeta (lambda - eps)}
    eps = 0.1
    zs = [10.0, 40.0, 80.0, 160.0]
    r = [m_k(NEG, 1.0, 2, z) / math.exp(z * (1.0 - eps)) for z in zs]
    assert np.all(np.diff(r) > 0)


def test_long_memory_needs_exponential_moments():
    with pytest.raises(DomainError):
        m_k(Model(two_sided_power(1.5), 0.75), 1.0, 2, 1.0)
