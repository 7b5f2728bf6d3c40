"""Saddle point of the exponent on the imaginary axis.

For ``xi > 0`` the exponent at ``z = i xi`` is the cumulant
``Psi(t, i xi) = t K(chi xi)`` of the kept jumps, where ``K`` is the
cumulant at ``t = 1``.  Its derivatives are the ``M_k``; the critical point
of ``t K(chi xi) - xi x`` solves ``M_1(t, xi) = x``.

Kept jumps are all of them for ``H > 1/2`` and those with image size
``w <= lambda`` for ``H < 1/2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from ._validation import DomainError, FLMError, check_positive
from .charfn import Model, _atom_s_sets
from .image import DiscreteImage
from .levy_measure import check_exponential_moments

__all__ = [
    "SaddleResult",
    "SaddleError",
    "m_k",
    "m_k_quadrature",
    "solve_saddle",
    "solve_saddle_scaled",
    "saddle_asymptote_check",
    "AsymptoteCheck",
]


class SaddleError(FLMError):
    """No critical point: ``x`` at or below the boundary, or no bracket."""

    exit_code = 1


@dataclass(frozen=True)
class SaddleResult:
    xi: float
    D: float
    K: float
    residual: float
    x_t: float
    zeta: float
    y: float
    iterations: int = 0


def _engine(model: Model) -> DiscreteImage:
    cache = model.__dict__.setdefault("_saddle_cache", {})
    if "disc" not in cache:
        if not model.kernel.short_memory:
            # exponential moments of every order are needed for the whole axis
            for C in (1.0, 100.0):
                if not check_exponential_moments(model.mu, C):
                    raise DomainError("the saddle path for H > 1/2 needs exponential moments")
        w_hi = model.lambda_trunc if model.kernel.short_memory else math.inf
        cache["disc"] = DiscreteImage(model.image, w_hi=w_hi, w_cut=1e7, w_T=1e-7, h=math.inf,
                                      ratio=1.25, q=24)
    return cache["disc"]


def _cumulant(model, zeta, k):
    return _engine(model).cumulant(zeta, k)


def m_k(model: Model, t, k: int, xi):
    """``M_k(t, xi)``: ``k``-th derivative of ``Psi(t, i xi)`` in ``xi`` (``k >= 1``)."""
    t = check_positive("t", t)
    if int(k) != k or k < 0:
        raise DomainError("k must be a nonnegative integer")
    chi = model.chi(t)
    return chi**k * t * _cumulant(model, chi * float(xi), int(k))


def x_boundary(model: Model, t=1.0) -> float:
    """Lower end ``x_t`` of the range of ``M_1(t, .)`` on ``(0, inf)``."""
    t = check_positive("t", t)
    return t * model.chi(t) * _cumulant(model, 0.0, 1)


def solve_saddle_scaled(model: Model, t, y_scaled, truncated=True):
    """``zeta`` with ``K'(zeta) = x / (t chi)`` where ``y_scaled = x / chi``; ``0`` if none exists."""
    target = float(y_scaled) / float(t)
    if target <= _cumulant(model, 0.0, 1):
        return 0.0
    return _root(model, target)[0]


def _root(model, y, rtol=1e-12):
    d1 = lambda z: _cumulant(model, z, 1)  # noqa: E731
    lo, hi = 0.0, 1.0
    it = 0
    while d1(hi) <= y:
        lo, hi = hi, 2.0 * hi
        it += 1
        if hi > 1e8:
            raise SaddleError(f"no bracket for the saddle point at y = {y}")
    while hi - lo > rtol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if d1(mid) > y:
            hi = mid
        else:
            lo = mid
        it += 1
    z = 0.5 * (lo + hi)
    for _ in range(3):
        step = (d1(z) - y) / _cumulant(model, z, 2)
        if not math.isfinite(step):
            break
        z_new = z - step
        if not lo - 1e-9 * hi <= z_new <= hi + 1e-9 * hi:
            break
        z = z_new
        it += 1
    return z, it


def solve_saddle(model: Model, t, x) -> SaddleResult:
    """Critical point ``xi(t, x)`` of ``Psi(t, i xi) - xi x`` on ``(0, inf)``.

    Solved directly in ``xi`` at time ``t`` by doubling, bisection and
    Newton polish on ``M_1(t, xi) = x``.
    """
    t = check_positive("t", t)
    x = float(x)
    xt = x_boundary(model, t)
    if not x > xt:
        raise SaddleError(f"x = {x} is not above the boundary x_t = {xt}")
    f1 = lambda xi: m_k(model, t, 1, xi)  # noqa: E731
    lo, hi = 0.0, 1.0
    it = 0
    while f1(hi) <= x:
        lo, hi = hi, 2.0 * hi
        it += 1
        if hi > 1e12:
            raise SaddleError(f"no bracket found for x = {x}")
    while hi - lo > 1e-12 * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if f1(mid) > x:
            hi = mid
        else:
            lo = mid
        it += 1
    xi = 0.5 * (lo + hi)
    for _ in range(3):
        g = f1(xi) - x
        if abs(g) <= 1e-14 * max(1.0, abs(x)):
            break
        xi_new = xi - g / m_k(model, t, 2, xi)
        if not (lo <= xi_new <= hi) and hi - lo > 0:
            break
        xi = xi_new
        it += 1
    chi = model.chi(t)
    zeta = chi * xi
    D = t * _cumulant(model, zeta, 0) - xi * x
    K2 = m_k(model, t, 2, xi)
    return SaddleResult(xi=xi, D=D, K=K2, residual=abs(f1(xi) - x), x_t=xt, zeta=zeta,
                        y=x * t ** (-model.H - 0.5), iterations=it)


def m_k_quadrature(model: Model, t, k: int, xi, epsrel=1e-11):
    """``M_k(t, xi)`` by direct quadrature over ``s`` at time ``t`` (atoms only).

    Independent of the image measure and of the scaling in ``t``; used as an
    oracle.
    """
    t = check_positive("t", t)
    ker = model.kernel
    chi = model.chi(t)
    lam = model.lambda_trunc * chi
    short = ker.short_memory
    if model.image.pieces:
        raise DomainError("the quadrature oracle handles atoms only")

    def g(c, inner):
        e = math.exp(xi * c)
        if k == 0:
            return e - 1.0 - (xi * c if inner else 0.0)
        if k == 1:
            return c * (e - (1.0 if inner else 0.0))
        return c**k * e

    total = 0.0
    for u, m in zip(model.image.atom_u, model.image.atom_m):
        inner = abs(u) <= 1.0
        cut = _atom_s_sets(ker, u, model.lambda_trunc) if short else []
        # ranges of sigma = s / t that are kept, as (lo, hi) with the kernel f(sigma)
        kept = _complement(cut)

        def fun_neg(v):  # sigma = -e^v
            r = math.exp(v)
            c = chi * float(ker._f_neg(r)) * u
            return g(c, inner) * r

        def fun_pos(v):  # sigma = 1 - e^v
            r = math.exp(v)
            c = chi * float(ker._f_pos(r)) * u
            return g(c, inner) * r

        for lo, hi in kept:
            if hi <= 0.0:
                a = math.log(-hi) if hi < 0 else -60.0
                b = math.log(-lo) if math.isfinite(lo) else 60.0
                total += m * t * _quad(fun_neg, a, b, epsrel)
            else:
                lo0 = max(lo, 0.0)
                a = math.log(1.0 - hi) if hi < 1.0 else -60.0
                b = math.log(1.0 - lo0)
                total += m * t * _quad(fun_pos, a, b, epsrel)
                if lo < 0:
                    b2 = math.log(-lo) if math.isfinite(lo) else 60.0
                    total += m * t * _quad(fun_neg, -60.0, b2, epsrel)
    return total


def _complement(cut):
    """Kept ``sigma`` ranges: ``(-inf, 0)`` and ``(0, 1)`` minus the cut intervals."""
    pieces = [(-math.inf, 0.0), (0.0, 1.0)]
    for c_lo, c_hi in cut:
        nxt = []
        for lo, hi in pieces:
            if c_hi <= lo or c_lo >= hi:
                nxt.append((lo, hi))
                continue
            if c_lo > lo:
                nxt.append((lo, c_lo))
            if c_hi < hi:
                nxt.append((c_hi, hi))
        pieces = nxt
    return [p for p in pieces if p[1] > p[0]]


def _quad(f, a, b, epsrel):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, a, b, epsabs=0.0, epsrel=epsrel, limit=800)[0]


@dataclass
class AsymptoteCheck:
    rows: list = field(default_factory=list)

    def ratios(self, key):
        return np.array([r[key] for r in self.rows if r["valid"]])


def saddle_asymptote_check(model: Model, x_grid) -> AsymptoteCheck:
    """Ratios ``D(x) / (-x ln x / lambda)``, ``M_2(zeta) / (lambda x)`` and ``zeta lambda / ln x`` at ``t = 1``."""
    if not model.kernel.short_memory:
        raise DomainError("the check applies to the truncated case H < 1/2")
    lam = model.lambda_trunc
    xt = x_boundary(model, 1.0)
    out = AsymptoteCheck()
    for x in np.atleast_1d(np.asarray(x_grid, dtype=float)):
        row = {"x": float(x), "valid": bool(x > xt and x > 1.0)}
        if row["valid"]:
            r = solve_saddle(model, 1.0, x)
            lx = math.log(x)
            row.update(zeta=r.xi, D=r.D, M2=r.K, residual=r.residual,
                       D_ratio=r.D / (-x * lx / lam), M2_ratio=r.K / (lam * x), zeta_ratio=r.xi * lam / lx)
        out.rows.append(row)
    return out
