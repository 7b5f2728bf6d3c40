"""Closed-form tail asymptotes of the density and exact-vs-asymptote reports."""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy import integrate

from ._validation import DomainError, RegimeError, check_positive
from .charfn import Model, mathfrak_m
from .levy_measure import TailRegime, classify_tail_regime, check_exponential_moments, moment_integral
from .saddle import solve_saddle

__all__ = [
    "Regime",
    "TailReport",
    "thm21_asymptote",
    "thm22_heavy_asymptote",
    "thm22_regular_asymptote",
    "ex41_asymptote",
    "phi_integral",
    "phi_integral_closed_form",
    "profile_asymptote",
    "compare",
    "auto_regime",
    "explore_joint_limit",
    "profile_shift_check",
]

JOINT_LIMIT_LABEL = "conjectured, unproven"


class Regime(str, enum.Enum):
    THM21 = "Thm21"
    THM22_I = "Thm22_i"
    THM22_II = "Thm22_ii"
    EX41 = "Ex41"

    def __str__(self):
        return self.value


@dataclass
class TailReport:
    regime: Regime
    rows: list = field(default_factory=list)
    label: str = ""

    def add(self, t, x, exact, asymptote, err=0.0):
        ratio = exact / asymptote if asymptote > 0 else math.nan
        self.rows.append({"t": float(t), "x": float(x), "exact": float(exact),
                          "asymptote": float(asymptote), "ratio": float(ratio), "err": float(err)})

    def ratios(self):
        return np.array([r["ratio"] for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "exact", "asymptote", "ratio", "err"])
        for r in self.rows:
            w.writerow([format(r[k], ".17g") for k in ("t", "x", "exact", "asymptote", "ratio", "err")])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"regime": str(self.regime), "label": self.label,
                           "rows": [{k: format(v, ".17g") for k, v in r.items()} for r in self.rows]})


# ----------------------------------------------------------------------


def _require_regime(model: Model, wanted: TailRegime):
    if not model.kernel.short_memory:
        raise RegimeError("this asymptote is for H < 1/2")
    got = classify_tail_regime(model.mu, model.H)
    if got != wanted:
        raise RegimeError(f"the measure is {got}, the asymptote needs {wanted}")


def thm21_asymptote(model: Model, t, x):
    """Saddle-point asymptote ``(2 pi M_2)^{-1/2} exp(D)`` for ``H > 1/2``."""
    t = check_positive("t", t)
    if model.kernel.short_memory:
        raise RegimeError("the saddle-point asymptote needs H > 1/2")
    if not model.mu.has_side(1.0):
        raise DomainError("the saddle-point asymptote needs mass on u > 0")
    if not check_exponential_moments(model.mu, 1.0):
        raise DomainError("the saddle-point asymptote needs exponential moments")
    r = solve_saddle(model, t, float(x))
    return math.exp(r.D) / math.sqrt(2.0 * math.pi * r.K)


def thm22_heavy_asymptote(model: Model, t, x):
    """``t^{3/2-H} frak_m(t^{1/2-H} x)`` for extremely heavy tails (``H < 1/2``)."""
    _require_regime(model, TailRegime.EXTREMELY_HEAVY)
    t = check_positive("t", t)
    return t ** (1.5 - model.H) * mathfrak_m(model, t ** (0.5 - model.H) * np.asarray(x, dtype=float))


def thm22_regular_asymptote(model: Model, x):
    """``c_H (int |u|^{2/(1-2H)} mu(du)) x^{-(3-2H)/(1-2H)}``; does not depend on time."""
    _require_regime(model, TailRegime.REGULAR)
    if not model.mu.has_side(-1.0):
        raise DomainError("this asymptote needs mass on u < 0")
    ker = model.kernel
    c_h, _ = ker.ell_asymptotic_constants()
    mom = moment_integral(model.mu, 2.0 / (1.0 - 2.0 * model.H), "all").value
    return c_h * mom * np.asarray(x, dtype=float) ** (-ker.p_large)


def _phi_fn(kernel):
    def phi(z):
        z = np.asarray(z, dtype=float)
        with np.errstate(all="ignore"):
            return kernel.ell(1.0 / z) / z

    return phi


def phi_integral(kernel, alpha, side):
    """``int Phi(z) alpha |z|^{-alpha-1} dz`` over one half-line (``side`` = +1 or -1) by quadrature."""
    phi = _phi_fn(kernel)
    G = kernel.gamma_const
    if side > 0:
        f = lambda z: float(phi(z)) * alpha * z ** (-alpha - 1.0)  # noqa: E731
        # Phi vanishes above Gamma(H+1/2); substitute z = G e^{-v}
        g = lambda v: f(G * math.exp(-v)) * G * math.exp(-v)  # noqa: E731
        return integrate.quad(g, 0.0, 80.0, epsabs=0.0, epsrel=1e-12, limit=400)[0]
    f = lambda z: float(phi(-z)) * alpha * z ** (-alpha - 1.0)  # noqa: E731
    g = lambda v: f(math.exp(v)) * math.exp(v)  # noqa: E731
    # power-law decay at both ends; beyond |v| = 80 the integrand is below e^-50
    parts = [(-80.0, -5.0), (-5.0, 0.0), (0.0, 5.0), (5.0, 80.0)]
    return sum(integrate.quad(g, a, b, epsabs=0.0, epsrel=1e-12, limit=400)[0] for a, b in parts)


def phi_integral_closed_form(kernel, alpha):
    """Positive half-line integral in closed form: ``alpha c_H G^{q-alpha} / (q - alpha)``, ``q = 2/(1-2H)``."""
    c_h, _ = kernel.ell_asymptotic_constants()
    q = 2.0 / (1.0 - 2.0 * kernel.H)
    return alpha * c_h * kernel.gamma_const ** (q - alpha) / (q - alpha)


def _check_alpha(H, alpha):
    lo, hi = 2.0 / (3.0 - 2.0 * H), 2.0 / (1.0 - 2.0 * H)
    if not lo < alpha < hi:
        raise DomainError(f"alpha must lie in ({lo:.6g}, {hi:.6g}), got {alpha}")


def ex41_asymptote(model: Model, t, x, alpha, C_minus, C_plus):
    """Power-law asymptote for regularly varying tails ``mu_pm(r) ~ C_pm r^{-alpha}``."""
    t = check_positive("t", t)
    if not model.kernel.short_memory:
        raise RegimeError("this asymptote is for H < 1/2")
    _check_alpha(model.H, alpha)
    ker = model.kernel
    total = C_plus * phi_integral(ker, alpha, 1) + C_minus * phi_integral(ker, alpha, -1)
    return t ** (1.0 - alpha * (0.5 - model.H)) * np.asarray(x, dtype=float) ** (-alpha - 1.0) * total


def profile_asymptote(model: Model, r, alpha, C_minus, C_plus):
    """``r frak_m(r)`` predicted from regularly varying tails: ``mu_-(r) I_- + mu_+(r) I_+``."""
    _check_alpha(model.H, alpha)
    ker = model.kernel
    r = np.asarray(r, dtype=float)
    return (C_minus * phi_integral(ker, alpha, -1) + C_plus * phi_integral(ker, alpha, 1)) * r ** (-alpha)


def profile_shift_check(model: Model, n_lo=8, n_hi=11, tol=0.1):
    """Largest ``|frak_m(r - y)/frak_m(r) - 1|`` over ``r`` in ``[2^n_lo c, 2^n_hi c]``, ``y = c = 1/Gamma(H+1/2)``.

    An atom at ``u`` puts a jump into the profile at ``|u| c``, so besides a
    geometric grid the check probes ``r = |u| c + c/2`` for every atom in
    range.  Returns ``(deviation, suspected)``; ``suspected`` flags a profile
    that is likely not long-tailed.
    """
    c = 1.0 / model.kernel.gamma_const
    r_lo, r_hi = 2.0**n_lo * c, 2.0**n_hi * c
    locs, _ = model.mu.all_atoms(r_hi / c)
    jumps = np.abs(locs) * c + 0.5 * c
    r = np.concatenate([np.geomspace(r_lo, r_hi, 64), jumps[(jumps >= r_lo) & (jumps <= r_hi)]])
    hi = mathfrak_m(model, r)
    lo = mathfrak_m(model, r - c)
    ok = hi > 0
    dev = float(np.max(np.abs(lo[ok] / hi[ok] - 1.0))) if ok.any() else math.inf
    return dev, dev > tol


# ----------------------------------------------------------------------


def auto_regime(model: Model) -> Regime:
    if not model.kernel.short_memory:
        return Regime.THM21
    reg = classify_tail_regime(model.mu, model.H)
    return Regime.THM22_II if reg == TailRegime.REGULAR else Regime.THM22_I


def _asymptote(model, regime, t, x, ex41_params):
    # right-tail formulas; the left tail goes through mu.reflected()
    if regime != Regime.THM22_I and x <= 0:
        return math.nan
    if regime == Regime.THM21:
        return thm21_asymptote(model, t, x)
    if regime == Regime.THM22_I:
        return float(thm22_heavy_asymptote(model, t, x))
    if regime == Regime.THM22_II:
        return float(thm22_regular_asymptote(model, x))
    if ex41_params is None:
        raise DomainError("the Ex41 regime needs (alpha, C_minus, C_plus)")
    return float(ex41_asymptote(model, t, x, *ex41_params))


def compare(model: Model, regime, grid: Iterable, ex41_params: Optional[tuple] = None) -> TailReport:
    """Exact density vs asymptote on ``grid`` of ``(t, x)`` pairs."""
    from .density import density_fourier

    regime = Regime(regime)
    expected = auto_regime(model)
    if regime == Regime.EX41:
        if expected != Regime.THM22_I:
            raise RegimeError("the Ex41 asymptote applies to extremely heavy tails")
    elif regime != expected:
        raise RegimeError(f"model is in regime {expected}, not {regime}")
    report = TailReport(regime)
    by_t = {}
    for t, x in grid:
        by_t.setdefault(float(t), []).append(float(x))
    for t, xs in by_t.items():
        xs_arr = np.array(xs)
        exact, err = density_fourier(model, t, xs_arr)
        for x, p, e in zip(xs_arr, exact, err):
            report.add(t, x, p, _asymptote(model, regime, t, x, ex41_params), e)
    return report


def explore_joint_limit(model: Model, pairs: Iterable, ex41_params=None) -> TailReport:
    """Exact vs heavy-tail asymptote along ``(t, x)`` with ``x t^{-H-1/2}`` growing.

    No proven result covers the joint limit; the report carries the
    label ``conjectured, unproven``.
    """
    rep = compare(model, Regime.THM22_I if ex41_params is None else Regime.EX41, pairs, ex41_params)
    rep.label = JOINT_LIMIT_LABEL
    return rep
