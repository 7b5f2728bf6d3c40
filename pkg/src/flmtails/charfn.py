"""Characteristic exponent, its truncated split and the big-jump intensity.

Conventions
-----------
``psi(model, t, z)`` is ``Psi(t, z)``, the integral of
``exp(-i z f(t,s) u) - 1 + i z f(t,s) u 1{|u| <= 1}``; the characteristic
function of ``Z_t`` is ``phi(t, z) = exp(Psi(t, -z))``.

The split uses the image measure ``N`` at ``t = 1``: jumps of image size
``w <= lambda`` form the truncated part and the rest is a compound Poisson
part of rate ``Lambda`` with intensity profile ``frak_m``.  At time ``t``
image sizes scale by ``chi = t^(H - 1/2)`` and intensities by ``t``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from ._kernels import composite_rule
from ._validation import (
    DivergenceError,
    DomainError,
    QuadratureError,
    RegimeError,
    check_positive,
)
from .image import ImageMeasure
from .kernel import Kernel
from .levy_measure import LevyMeasure, check_existence

__all__ = [
    "Model",
    "psi",
    "psi_split",
    "psi_bruteforce",
    "mathfrak_m",
    "m_t_density",
    "pushforward_oracle",
    "theta",
]

_EPSABS = 1e-12
_EPSREL = 1e-10


def _quad(f, a, b, **kw):
    kw.setdefault("epsabs", _EPSABS)
    kw.setdefault("epsrel", _EPSREL)
    kw.setdefault("limit", 500)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, a, b, **kw)[:2]
    return val, err


class Model:
    """A Levy measure, a Hurst index and the truncation level ``lambda``.

    ``lambda_trunc`` defaults to ``1/Gamma(H + 1/2)``.  ``Lambda`` and ``a1``
    are the rate and the compensator shift of the big-jump part at ``t = 1``.
    """

    def __init__(self, mu: LevyMeasure, H: float, lambda_trunc: Optional[float] = None,
                 guard: float = 1e-3, require_existence: bool = True):
        mu.require_nonzero()
        self.mu = mu
        self.kernel = Kernel(H, guard=guard)
        self.H = self.kernel.H
        if require_existence and not check_existence(mu, self.H):
            raise DivergenceError("the stochastic integral does not exist for this measure and H")
        if lambda_trunc is None:
            lambda_trunc = 1.0 / self.kernel.gamma_const
        self.lambda_trunc = check_positive("lambda", lambda_trunc)

    def __repr__(self):
        return f"Model(H={self.H}, lambda={self.lambda_trunc}, mu={self.mu!r})"

    @cached_property
    def image(self) -> ImageMeasure:
        return ImageMeasure(self.mu, self.kernel)

    def chi(self, t):
        return float(t) ** self.kernel.e

    @cached_property
    def Lambda(self) -> float:
        """Mass of ``N`` above ``lambda``."""
        return self._big_jump_integral(0)

    @cached_property
    def a1(self) -> float:
        """First moment of the compensated part of ``N`` above ``lambda``."""
        return self._big_jump_integral(1)

    def a(self, t) -> float:
        return float(t) ** (self.H + 0.5) * self.a1

    def Lambda_t(self, t) -> float:
        return float(t) * self.Lambda

    def _big_jump_integral(self, power):
        lam = self.lambda_trunc
        total = 0.0
        ker = self.kernel
        for u, m in zip(self.image.atom_u, self.image.atom_m):
            if power == 1 and abs(u) > 1.0:
                continue
            for lo, hi in _atom_s_sets(ker, u, lam):
                if power == 0:
                    total += m * (hi - lo)
                else:
                    total += m * u * (ker.antiderivative(hi) - ker.antiderivative(lo))
        if self.image.pieces:
            total += _w_integral(self.image, lam, math.inf, power, only_pieces=True)
        return float(total)

    def validate_lambda(self, t=1.0, z_grid=(10.0, 100.0, 1000.0)):
        """Check that ``|phi_1(t, z)| z^2`` decreases along ``z_grid``; raise otherwise."""
        vals = []
        for z in z_grid:
            p1, _ = psi_split(self, t, z)
            vals.append(math.exp(p1.real) * z * z)
        ok = all(b < a for a, b in zip(vals, vals[1:]))
        if not ok:
            raise DomainError(f"truncation level {self.lambda_trunc} gives no decay of |phi_1| z^2: {vals}")
        return vals


def _atom_s_sets(ker: Kernel, u, lam):
    """Intervals of ``s`` in ``(-inf, 1)`` where ``f(s) u > lam`` for one atom."""
    if ker.short_memory:
        if u > 0:
            width = min(1.0, (ker.gamma_const * lam / u) ** (1.0 / ker.e))
            return [(1.0 - width, 1.0)]
        v_star = float(ker._solve_neg(-lam / abs(u)))
        return [(-v_star, 0.0)]
    # H > 1/2: f is positive, bounded by 1/Gamma on (0,1] and decreasing to 0 on s < 0
    if u < 0:
        return []
    y = lam / u
    if y >= 1.0 / ker.gamma_const:
        return []
    out = [(0.0, 1.0)]
    v_star = float(ker._solve_neg(y))
    out.append((-v_star, 0.0))
    return out


def _w_integral(image: ImageMeasure, lo, hi, power, only_pieces=False):
    """``int_lo^hi w^power n(w) dw`` on ``w > 0`` (compensated part only when ``power == 1``)."""
    if only_pieces:
        sub = ImageMeasure.__new__(ImageMeasure)
        sub.__dict__.update(image.__dict__)
        sub.atom_u = np.zeros(0)
        sub.atom_m = np.zeros(0)
        image = sub
    brk = [b for b in image.breakpoints() if lo < b < hi]

    def g(w):
        n_in, n_out = image.density_parts(np.array([w]))
        val = n_in[0] if power == 1 else n_in[0] + n_out[0]
        return val * w**power

    edges = [lo] + brk
    total = 0.0
    for a, b in zip(edges, edges[1:] + [hi]):
        if math.isinf(b):
            total += _quad(g, a, math.inf)[0]
        else:
            total += _quad(g, a, b)[0]
    return total


# ----------------------------------------------------------------------
# exponent by adaptive quadrature over the image measure
# ----------------------------------------------------------------------


def _side_exponent(image: ImageMeasure, sign, zeta, lo, hi):
    """``int (e^{i zeta w} - 1 - i zeta w 1_in) n(w) dw`` over ``|w| in (lo, hi]`` on one side.

    Returns ``(real, imag, abserr)``.
    """
    if hi <= lo or zeta == 0.0:
        return 0.0, 0.0, 0.0
    az = abs(zeta)
    sz = math.copysign(1.0, zeta) * sign
    brk = sorted(abs(b) for b in image.breakpoints() if np.sign(b) == sign and lo < abs(b) < hi)

    def parts(r):
        n_in, n_out = image.density_parts(np.array([sign * r]))
        return float(n_in[0]), float(n_out[0])

    re = im = err = 0.0
    split = min(max(1.0 / az, lo), hi)
    if lo == 0.0:
        # near zero: w = e^v, integrands written to avoid cancellation
        def near_re(v):
            r = math.exp(v)
            ni, no = parts(r)
            return -(ni + no) * 2.0 * math.sin(0.5 * az * r) ** 2 * r

        def near_im(v):
            r = math.exp(v)
            ni, no = parts(r)
            y = az * r
            return sz * (ni * (math.sin(y) - y) + no * math.sin(y)) * r

        top = math.log(split)
        pts = [math.log(b) for b in brk if b < split]
        bottom = top - 60.0
        for f, slot in ((near_re, 0), (near_im, 1)):
            edges = [bottom] + pts + [top]
            v = 0.0
            for a, b in zip(edges[:-1], edges[1:]):
                dv, e = _quad(f, a, b)
                v += dv
                err += e
            tail = _power_tail(f, bottom)
            v += tail
            err += 1e-3 * abs(tail)
            if slot == 0:
                re += v
            else:
                im += v
        start = split
    else:
        start = lo
    if start >= hi:
        return re, im, err
    edges = [start] + [b for b in brk if b > start] + [hi]
    for a, b in zip(edges[:-1], edges[1:]):
        if math.isinf(b):
            cos_v, e1 = _tail_fourier(parts, a, az, "cos")
            sin_v, e2 = _tail_fourier(parts, a, az, "sin")
        else:
            cos_v, e1 = _quad(lambda r: sum(parts(r)), a, b, weight="cos", wvar=az)
            sin_v, e2 = _quad(lambda r: sum(parts(r)), a, b, weight="sin", wvar=az)
        mass, e3 = _quad(lambda r: sum(parts(r)), a, b) if math.isfinite(b) else _inf_quad(lambda r: sum(parts(r)), a)
        first, e4 = _quad(lambda r: parts(r)[0] * r, a, b) if math.isfinite(b) else _inf_quad(lambda r: parts(r)[0] * r, a)
        re += cos_v - mass
        im += sz * (sin_v - az * first)
        err += e1 + e2 + e3 + az * e4
    return re, im, err


def _power_tail(f, v0):
    """``int_{-inf}^{v0} f dv`` for ``f`` behaving like ``A e^{kappa v}`` there.

    Uncompensated jumps have image density ~ ``w^(-1-alpha)`` near zero with
    ``alpha = 2/(3-2H)`` close to 1, so their integrand decays slowly in ``v``.
    """
    g0, g1 = f(v0), f(v0 + 1.0)
    if g0 == 0.0 or g0 * g1 <= 0.0 or abs(g1) <= abs(g0):
        return 0.0
    return g0 / math.log(g1 / g0)


def _tail_fourier(parts, a, az, kind):
    """``int_a^inf n(r) cos/sin(az r) dr``; shifted to start at zero for the QAWF routine."""
    phase = az * a
    fun = lambda s: sum(parts(a + s))  # noqa: E731
    c, e1 = _quad(fun, 0.0, math.inf, weight="cos", wvar=az)
    s, e2 = _quad(fun, 0.0, math.inf, weight="sin", wvar=az)
    if kind == "cos":
        return c * math.cos(phase) - s * math.sin(phase), e1 + e2
    return s * math.cos(phase) + c * math.sin(phase), e1 + e2


def _inf_quad(f, a):
    return _quad(f, a, math.inf)


def _image_exponent(image: ImageMeasure, zeta, w_max=math.inf):
    """``kappa(zeta)`` at ``t = 1`` restricted to ``w <= w_max`` (``w_max > 0``)."""
    lo_s, hi_s = image.support()
    re = im = err = 0.0
    r1, i1, e1 = _side_exponent(image, 1.0, zeta, 0.0, min(hi_s, w_max))
    r2, i2, e2 = _side_exponent(image, -1.0, zeta, 0.0, -lo_s)
    return complex(r1 + r2, i1 + i2), e1 + e2


def psi(model: Model, t, z, tol=1e-8) -> complex:
    """``Psi(t, z)``; raises :class:`QuadratureError` when the error estimate exceeds ``tol``."""
    t = check_positive("t", t)
    z = float(z)
    if z == 0.0:
        return 0j
    val, err = _image_exponent(model.image, -model.chi(t) * z)
    val, err = t * val, t * err
    if err > tol * max(1.0, abs(val)):
        raise QuadratureError("characteristic exponent quadrature did not converge", val, err)
    return val


def psi_split(model: Model, t, z):
    """``(psi_1, psi_2)`` with ``exp(psi_1 + psi_2) = phi(t, z)``."""
    t = check_positive("t", t)
    z = float(z)
    if z == 0.0:
        return 0j, 0j
    chi = model.chi(t)
    lam = model.lambda_trunc
    p1, _ = _image_exponent(model.image, chi * z, w_max=lam)
    jumps, _ = _side_exponent_plain(model.image, chi * z, lam)
    p2 = t * jumps - 1j * z * model.a(t)
    return t * p1, p2


def _side_exponent_plain(image: ImageMeasure, zeta, lam):
    """``int_{w > lam} (e^{i zeta w} - 1) n(w) dw``."""
    _, hi_s = image.support()
    if hi_s <= lam:
        return 0j, 0.0
    r, i, e = _side_exponent(image, 1.0, zeta, lam, hi_s)
    # _side_exponent compensates the in-part; put the drift back
    first = _w_integral(image, lam, hi_s, 1)
    return complex(r, i + zeta * first), e


def psi_bruteforce(model: Model, t, z, tol=1e-6, max_level=22):
    """``Psi(t, z)`` by midpoint sums in ``s`` with grid halving until the change is below ``tol``.

    Three substituted ranges cover ``s < -1``, ``-1 < s < 0`` and ``0 < s < 1``
    (time ``t`` units via scaling).  Only atoms (including dyadic ones) and
    density pieces with a fixed log-u rule are supported.
    """
    ker = model.kernel
    chi = model.chi(t)
    zz = -chi * float(z)
    us, ms = _bruteforce_support(model)
    inner = np.abs(us) <= 1.0

    def total(n):
        acc = 0j
        # s = -e^v, v in (0, V): far past
        for kind in range(3):
            v = (np.arange(n) + 0.5) / n
            if kind == 0:  # s = -exp(V x), x in (0, 1)
                # the uncompensated part decays like |s|^(H-3/2): cut where the rest is below e^-30
                V = max(40.0, 30.0 / abs(0.5 - model.H))
                s_abs = np.exp(V * v)
                jac = V * s_abs / n
                c = ker._f_neg(s_abs)
            elif kind == 1:  # s = -exp(-V x) in (-1, 0)
                V = 40.0
                s_abs = np.exp(-V * v)
                jac = V * s_abs / n
                c = ker._f_neg(s_abs)
            else:  # s = 1 - exp(-V x) in (0, 1)
                V = 40.0
                w = np.exp(-V * v)
                jac = V * w / n
                c = ker._f_pos(w)
            y = zz * c[:, None] * us[None, :]
            val = np.where(inner[None, :], np.expm1(1j * y) - 1j * y, np.expm1(1j * y))
            acc += np.sum(val * ms[None, :] * jac[:, None])
        return acc

    n = 1024
    prev = total(n)
    for _ in range(max_level):
        n *= 2
        cur = total(n)
        if abs(cur - prev) < tol:
            return t * cur
        prev = cur
    raise QuadratureError("brute-force exponent did not settle", t * prev, abs(cur - prev))


def _bruteforce_support(model: Model):
    im = model.image
    us = list(im.atom_u)
    ms = list(im.atom_m)
    for p in im.pieces:
        lo = p.amin
        hi = p.amax if math.isfinite(p.amax) else p.amin * 1e12
        edges = np.linspace(math.log(lo), math.log(hi), 201)
        tau, wt = composite_rule(edges, 8)
        u = p.sign * np.exp(tau)
        us.extend(u)
        ms.extend(p.density(u) * np.exp(tau) * wt)
    return np.array(us, dtype=float), np.array(ms, dtype=float)


# ----------------------------------------------------------------------
# big-jump intensity
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ProfileValue:
    minus: float
    plus: float

    @property
    def total(self):
        return self.minus + self.plus


def _require_short(model):
    if not model.kernel.short_memory:
        raise RegimeError("this quantity is defined for H < 1/2 only")


def mathfrak_m(model: Model, r, split=False):
    """Intensity profile ``frak_m(r)`` for ``r > 0``; with ``split`` returns the (u<0, u>0) parts."""
    _require_short(model)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("r must be positive")
    d = model.image.density_by_source(r)
    minus = d[0].sum(axis=0)
    plus = d[1].sum(axis=0)
    if split:
        return minus, plus
    out = minus + plus
    return out if out.ndim else float(out)


def m_t_density(model: Model, t, x):
    """Density of the big-jump intensity ``M_t``: ``t^(3/2-H) frak_m(x / chi)`` above ``lambda chi``."""
    _require_short(model)
    t = check_positive("t", t)
    x = np.asarray(x, dtype=float)
    chi = model.chi(t)
    out = np.zeros(x.shape)
    keep = x > model.lambda_trunc * chi
    if keep.any():
        out[keep] = t ** (1.5 - model.H) * mathfrak_m(model, x[keep] / chi)
    return out if out.ndim else float(out)


def pushforward_oracle(model: Model, t, g: Callable[[np.ndarray], np.ndarray]):
    """``int g dM_t`` computed directly over ``(s, u)`` without the image density."""
    _require_short(model)
    t = check_positive("t", t)
    ker = model.kernel
    chi = model.chi(t)
    lam = model.lambda_trunc

    def one_atom(u):
        total = 0.0
        for lo, hi in _atom_s_sets(ker, u, lam):
            if hi == 1.0:
                # s = 1 - w, w in (0, 1 - lo); log substitution at the singular end
                top = math.log(1.0 - lo)
                f = lambda v: float(g(np.array([chi * ker._f_pos(math.exp(v)) * u]))[0]) * math.exp(v)  # noqa: E731
                total += _quad(f, top - 80.0, top)[0]
            else:
                # s = -v, v in (0, -lo)
                top = math.log(-lo)
                f = lambda v: float(g(np.array([chi * ker._f_neg(math.exp(v)) * u]))[0]) * math.exp(v)  # noqa: E731
                total += _quad(f, top - 80.0, top)[0]
        return total

    acc = sum(m * one_atom(u) for u, m in zip(model.image.atom_u, model.image.atom_m))
    for p in model.image.pieces:
        hi = p.amax if math.isfinite(p.amax) else math.inf
        acc += p.integrate(one_atom, p.amin, hi, epsabs=1e-12, epsrel=1e-9)[0]
    return t * acc


def theta(model: Model, t, z, B=(0.0, math.inf)):
    """``Theta(t, z, B)``: ``t int (1 - cos(chi z w)) n(w) dw`` over kept jumps with ``chi w`` in ``B``.

    Kept jumps are ``w <= lambda`` for ``H < 1/2`` and all jumps otherwise.
    """
    t = check_positive("t", t)
    z = float(z)
    if z == 0.0:
        return 0.0
    chi = model.chi(t)
    lo, hi = float(B[0]) / chi, float(B[1]) / chi
    cap = model.lambda_trunc if model.kernel.short_memory else math.inf
    total = 0.0
    lo_s, hi_s = model.image.support()
    for sign, a, b in ((1.0, max(lo, 0.0), min(hi, cap, hi_s)), (-1.0, max(-hi, 0.0), min(-lo, -lo_s))):
        if b <= a:
            continue
        r, _, _ = _side_exponent(model.image, sign, chi * z, a, b)
        total -= r
    return t * total
