"""Mandelbrot-Van Ness kernel and the inverse-derivative function ``ell``.

The kernel is

    f(t, s) = [(t - s)_+^(H-1/2) - (-s)_+^(H-1/2)] / Gamma(H + 1/2)

and ``f(s) = f(1, s)``.  For ``H < 1/2`` the one-parameter kernel is
decreasing on ``(-inf, 0)`` with range ``(-inf, 0)`` and increasing on
``(0, 1)`` with range ``[1/Gamma(H+1/2), inf)``; ``ell`` is the derivative of
its inverse on these two branches and zero on the gap between them.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gamma

from ._kernels import solve_neg
from ._validation import check_hurst, DomainError

__all__ = ["Kernel", "SingularPointError"]


class SingularPointError(DomainError):
    """Raised when the kernel is evaluated at one of its singular points."""


class Kernel:
    """Kernel of the fractional Levy motion for a fixed Hurst parameter.

    Parameters
    ----------
    H : float
        Hurst parameter in ``(0, 1)``; must stay at least ``guard`` away from 1/2.
    guard : float
        Width of the excluded band around ``H = 1/2``.
    """

    def __init__(self, H: float, guard: float = 1e-3):
        self.H = check_hurst(H, guard=guard)
        self.guard = guard
        self.gamma_const = float(gamma(self.H + 0.5))
        # exponent H - 1/2 of the kernel
        self.e = self.H - 0.5
        self.ymin = 1.0 / self.gamma_const

    def __repr__(self):
        return f"Kernel(H={self.H!r})"

    def __eq__(self, other):
        return isinstance(other, Kernel) and other.H == self.H

    def __hash__(self):
        return hash(("Kernel", self.H))

    @property
    def short_memory(self) -> bool:
        return self.H < 0.5

    # ------------------------------------------------------------------
    # kernel values
    # ------------------------------------------------------------------
    def _f_neg(self, v):
        """f(-v) for v > 0, written to avoid cancellation at large v."""
        e = self.e
        return v ** e * np.expm1(e * np.log1p(1.0 / v)) / self.gamma_const

    def _df_neg(self, v):
        """f'(s) at s = -v < 0."""
        e = self.e
        return -(e / self.gamma_const) * v ** (e - 1.0) * np.expm1((e - 1.0) * np.log1p(1.0 / v))

    def _f_pos(self, w):
        """f(1 - w) for w in (0, 1]."""
        return w ** self.e / self.gamma_const

    def eval_f(self, t, s):
        """Evaluate ``f(t, s)``; broadcasts over ``t`` and ``s``.

        Raises :class:`SingularPointError` at ``s = 0`` or ``s = t`` when
        ``H < 1/2``.
        """
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        if np.any(t <= 0):
            raise DomainError("t must be positive")
        t, s = np.broadcast_arrays(t, s)
        if self.short_memory and np.any((s == 0) | (s == t)):
            raise SingularPointError("f(t, s) is singular at s = 0 and s = t for H < 1/2")
        sigma = s / t
        out = np.zeros(sigma.shape)
        neg = sigma < 0
        mid = (sigma >= 0) & (sigma < 1)
        out[neg] = self._f_neg(-sigma[neg])
        out[mid] = self._f_pos(1.0 - sigma[mid])
        out *= t ** self.e
        return out if out.ndim else float(out)

    def f(self, s):
        """One-parameter kernel ``f(s) = f(1, s)``."""
        return self.eval_f(1.0, s)

    def df(self, s):
        """Derivative of ``f(s)`` on ``(-inf, 0)`` and ``(0, 1)``; zero for ``s > 1``."""
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape)
        neg = s < 0
        mid = (s > 0) & (s < 1)
        out[neg] = self._df_neg(-s[neg])
        out[mid] = -self.e * (1.0 - s[mid]) ** (self.e - 1.0) / self.gamma_const
        return out if out.ndim else float(out)

    def antiderivative(self, s):
        """A primitive ``F`` of ``f`` on ``(-inf, 1]`` with ``F(1) = 0``.

        For ``H < 1/2`` also ``F(-inf) = 0``, so ``int f ds`` over the whole
        half-line vanishes.
        """
        s = np.asarray(s, dtype=float)
        a = self.H + 0.5
        neg = np.where(s < 0, -s, 0.0)
        with np.errstate(invalid="ignore", divide="ignore"):
            # (-s)^a - (1-s)^a = -(1-s)^a * (1 - (v/(1+v))^a) for v = -s
            val = np.where(
                s < 0,
                -((1.0 + neg) ** a) * -np.expm1(a * np.log1p(-1.0 / (1.0 + neg))),
                -(np.clip(1.0 - s, 0.0, None) ** a),
            )
        out = val / (a * self.gamma_const)
        return out if out.ndim else float(out)

    # ------------------------------------------------------------------
    # inversion on the negative half-line
    # ------------------------------------------------------------------
    def _solve_neg(self, y):
        """Return ``v > 0`` with ``f(-v) = y`` (bracketed Newton in log v, compiled)."""
        y = np.asarray(y, dtype=float)
        v = solve_neg(np.ascontiguousarray(y.ravel()), self.e, self.gamma_const)
        return v.reshape(y.shape)

    def inverse_f(self, y):
        """Point ``s`` with ``f(1, s) = y`` (``H < 1/2`` only).

        The positive branch uses the closed form; the negative branch uses a
        bracketed Newton iteration.  Values in the gap ``(0, 1/Gamma(H+1/2))``
        raise :class:`DomainError`.
        """
        if not self.short_memory:
            raise DomainError("inverse_f is defined for H < 1/2 only")
        y = np.asarray(y, dtype=float)
        if np.any((y >= 0) & (y < self.ymin)) or np.any(~np.isfinite(y)):
            raise DomainError("y lies in the gap [0, 1/Gamma(H+1/2)) of the range of f")
        out = np.empty(y.shape)
        pos = y >= self.ymin
        out[pos] = 1.0 - (self.gamma_const * y[pos]) ** (1.0 / self.e)
        out[~pos] = -self._solve_neg(y[~pos])
        return out if out.ndim else float(out)

    # ------------------------------------------------------------------
    # ell and the image density of Lebesgue measure under f
    # ------------------------------------------------------------------
    def ell(self, y):
        """``(f^{-1})'(y)`` on the range of ``f``, zero on the gap (``H < 1/2``)."""
        if not self.short_memory:
            raise DomainError("ell is defined for H < 1/2 only")
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape)
        pos = y >= self.ymin
        neg = y < 0
        c_h, _ = self.ell_asymptotic_constants()
        out[pos] = c_h * y[pos] ** (-self.p_large)
        if neg.any():
            v = self._solve_neg(y[neg])
            # f' underflows for y within a few ulps of 0-, where ell is -inf
            with np.errstate(divide="ignore", over="ignore"):
                out[neg] = 1.0 / self._df_neg(v)
        return out if out.ndim else float(out)

    @property
    def p_large(self) -> float:
        """Decay exponent (3-2H)/(1-2H) of ``ell`` at infinity."""
        return (3.0 - 2.0 * self.H) / (1.0 - 2.0 * self.H)

    @property
    def alpha_small(self) -> float:
        """Index 2/(3-2H) of the image density near zero."""
        return 2.0 / (3.0 - 2.0 * self.H)

    def ell_asymptotic_constants(self):
        """Return ``(c_H, c_hat_H)`` (``H < 1/2``)."""
        H, G = self.H, self.gamma_const
        if not self.short_memory:
            raise DomainError("c_H and c_hat_H are defined for H < 1/2 only")
        c_h = 2.0 / (1.0 - 2.0 * H) * G ** (-2.0 / (1.0 - 2.0 * H))
        c_hat = 2.0 / (3.0 - 2.0 * H) * ((1.0 - 2.0 * H) / (2.0 * G)) ** (2.0 / (3.0 - 2.0 * H))
        return c_h, c_hat

    def small_constant(self):
        """``(sign, C)`` with image density ``~ C |y|^(-1-alpha_small)`` as y -> 0 on side ``sign``."""
        gam = 1.0 - self.e
        C = (1.0 / gam) * (abs(self.e) / self.gamma_const) ** (1.0 / gam)
        return (-1.0 if self.short_memory else 1.0), C

    def support(self):
        """Support of the image of Lebesgue measure on ``(-inf, 1)`` under ``f``, as intervals."""
        if self.short_memory:
            return [(-np.inf, 0.0), (self.ymin, np.inf)]
        return [(0.0, self.ymin)]

    def image_density(self, y):
        """Density ``nu(y)`` of the image of ``ds`` on ``(-inf, 1)`` under ``f``.

        Equals ``|ell(y)|`` for ``H < 1/2``; for ``H > 1/2`` the kernel is not
        monotone and both branches on ``(0, 1/Gamma(H+1/2)]`` contribute.
        """
        y = np.asarray(y, dtype=float)
        if self.short_memory:
            return np.abs(self.ell(y))
        out = np.zeros(y.shape)
        inside = (y > 0) & (y <= self.ymin)
        if inside.any():
            yy = y[inside]
            G, e = self.gamma_const, self.e
            w = (G * yy) ** (1.0 / e)
            dens = G / (e * w ** (e - 1.0))
            lt = yy < self.ymin
            if lt.any():
                v = self._solve_neg(yy[lt])
                dens[lt] += 1.0 / np.abs(self._df_neg(v))
            out[inside] = dens
        return out if out.ndim else float(out)

    def f_squared_integral(self, s_min=-np.inf, s_max=1.0):
        """``int_{s_min}^{s_max} f(s)^2 ds`` (used for variance proxies)."""
        from scipy.integrate import quad

        def integrand_log(v):
            # s = -exp(v)
            x = np.exp(v)
            return float(self._f_neg(x)) ** 2 * x

        total = 0.0
        lo, hi = s_min, min(s_max, 1.0)
        if lo < 0:
            a = np.log(-min(hi, 0.0)) if hi < 0 else -60.0
            b = np.log(-lo) if np.isfinite(lo) else 80.0
            if b > a:
                total += quad(integrand_log, a, b, limit=400, epsabs=0, epsrel=1e-11)[0]
        if hi > 0:
            a0 = max(lo, 0.0)
            # w = 1 - s in (1 - hi, 1 - a0]; integrand w^(2e) / G^2 in closed form
            p = 2.0 * self.e + 1.0
            total += ((1.0 - a0) ** p - (1.0 - hi) ** p) / (p * self.gamma_const ** 2)
        return total
