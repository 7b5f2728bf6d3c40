"""Acceptance battery: each check returns a pass/fail verdict with its numbers.

Checks use fixed models so that results are comparable between runs.
``scale`` widens every tolerance by the given factor.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from ._kernels import composite_rule
from ._validation import ConfigError
from .asymptotics import (
    ex41_asymptote,
    phi_integral,
    phi_integral_closed_form,
    profile_asymptote,
    profile_shift_check,
    thm21_asymptote,
    thm22_heavy_asymptote,
    thm22_regular_asymptote,
)
from .charfn import Model, m_t_density, mathfrak_m, pushforward_oracle
from .density import FourierLaw, compose_density, density_fourier, log_tilde_p, subexp_test
from .kernel import Kernel
from .levy_measure import (
    LevyMeasure,
    TailRegime,
    check_existence,
    classify_tail_regime,
    dyadic_example,
    symmetric_atoms,
    two_sided_power,
)
from .saddle import saddle_asymptote_check, solve_saddle
from .simulate import SimConfig, empirical_density, sample

__all__ = ["CriterionResult", "CHECKS", "run_battery", "check_names"]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"[{verdict}] {self.number:2d} {self.name}: {self.summary} ({self.seconds:.1f} s)"

    def to_dict(self):
        return {"number": self.number, "name": self.name, "passed": self.passed, "summary": self.summary,
                "details": _plain(self.details), "seconds": self.seconds}


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)) and not isinstance(v, bool):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def _sym_model(lam=None):
    return Model(symmetric_atoms(), 0.25, lambda_trunc=lam)


def _trend_ok(ratios, band_lo, band_hi):
    """Last ratio inside the band and no farther from 1 than the first."""
    r = np.asarray(ratios, dtype=float)
    return bool(band_lo <= r[-1] <= band_hi and abs(r[-1] - 1.0) <= abs(r[0] - 1.0) + 1e-12)


# ----------------------------------------------------------------------
# 1-4: kernel, image measure, profile
# ----------------------------------------------------------------------
def kernel_scaling(scale=1.0):
    rng = np.random.default_rng(20240611)
    n = 10_000
    H = np.where(rng.random(n) < 0.5, rng.uniform(0.02, 0.49, n), rng.uniform(0.51, 0.98, n))
    t = np.exp(rng.uniform(math.log(0.05), math.log(20.0), n))
    s = t * rng.uniform(-10.0, 0.999, n)
    s = np.where(np.abs(s) < 1e-9, 1e-3 * t, s)
    worst = 0.0
    for h_val in np.unique(np.round(H, 2)):
        sel = np.round(H, 2) == h_val
        ker = Kernel(float(h_val))
        e = ker.e
        ts, ss = t[sel], s[sel]
        # the defining formula, evaluated literally
        past = np.where(ss < 0, -ss, 1.0) ** e * (ss < 0)
        direct = ((ts - ss) ** e - past) / ker.gamma_const
        scaled = ts**e * ker.f(ss / ts)
        worst = max(worst, float(np.max(np.abs(direct - scaled) / (1e-12 * (1.0 + np.abs(direct))))))
    ok = worst <= scale
    return ok, f"max |f(t,s) - t^e f(s/t)| / (1e-12 (1+|f|)) = {worst:.3g}", {"worst_scaled_error": worst}


def ell_closed_form(scale=1.0):
    details = {}
    ok = True
    for H in (0.1, 0.25, 0.4):
        ker = Kernel(H)
        # up to 1 - s = 1e-3, beyond which s itself is lost to rounding
        y = ker.ymin * np.geomspace(1.01, 1e-3**ker.e, 100)
        h = 1e-3 * y
        inv = ker.inverse_f
        fd = (inv(y - 2 * h) - 8 * inv(y - h) + 8 * inv(y + h) - inv(y + 2 * h)) / (12.0 * h)
        rel = float(np.max(np.abs(ker.ell(y) / fd - 1.0)))
        c_h, c_hat = ker.ell_asymptotic_constants()
        big = float(ker.ell(-1e6) / (-c_h * 1e6 ** (-ker.p_large)))
        small = float(ker.ell(-1e-6) / (-c_hat * 1e-6 ** (-(5 - 2 * H) / (3 - 2 * H))))
        details[f"H={H}"] = {"fd_rel": rel, "ratio_y=-1e6": big, "ratio_y=-1e-6": small}
        ok &= rel <= 1e-6 * scale and abs(big - 1) <= 0.02 * scale and abs(small - 1) <= 0.02 * scale
    worst = max(v["fd_rel"] for v in details.values())
    asym = max(max(abs(v["ratio_y=-1e6"] - 1), abs(v["ratio_y=-1e-6"] - 1)) for v in details.values())
    return ok, f"finite-difference rel {worst:.2g}; negative-branch asymptotes within {asym:.2%}", details


_TEST_FUNCTIONS: dict = {
    "exp(-x)": lambda x: np.exp(-x),
    "1/(1+x)^2": lambda x: 1.0 / (1.0 + x) ** 2,
    "x exp(-x/2)": lambda x: x * np.exp(-0.5 * x),
    "1/(1+x^4)": lambda x: 1.0 / (1.0 + x**4),
    "sin(x)^2/x^2": lambda x: np.sin(x) ** 2 / x**2,
}


def lemma32(scale=1.0):
    m = _sym_model(lam=1.0)
    details, ok = {}, True
    for t in (1.0, 2.0):
        edge = m.lambda_trunc * m.chi(t)
        for name, g in _TEST_FUNCTIONS.items():
            direct = pushforward_oracle(m, t, g)
            via = _quad_m(m, t, g, edge)
            rel = abs(direct / via - 1.0)
            details[f"t={t} {name}"] = rel
            ok &= rel <= 1e-6 * scale
        mass = _quad_m(m, t, np.ones_like, edge)
        rel = abs(mass / (t * m.Lambda) - 1.0)
        details[f"t={t} mass"] = rel
        ok &= rel <= 1e-8 * scale
    worst_g = max(v for k, v in details.items() if "mass" not in k)
    worst_m = max(v for k, v in details.items() if "mass" in k)
    return ok, f"oracle rel {worst_g:.2g} (tol 1e-6); mass rel {worst_m:.2g} (tol 1e-8)", details


def _quad_m(m, t, g, edge):
    """``int g m_t`` over ``(edge, inf)`` by composite Gauss-Legendre in ``v = log(x - edge)``."""
    nodes, weights = composite_rule(np.linspace(-40.0, 60.0, 801), 16)
    x = edge + np.exp(nodes)
    return float(np.sum(g(x) * m_t_density(m, t, x) * np.exp(nodes) * weights))


def lemma33(scale=1.0):
    m = _sym_model()
    c_h, _ = m.kernel.ell_asymptotic_constants()
    r = np.array([10.0, 100.0, 1000.0])
    ratio = r**5 * mathfrak_m(m, r) / (2.0 * c_h)
    ok = abs(ratio[-1] - 1.0) <= 0.10 * scale
    return ok, f"r^5 m(r) / 2c_H = {ratio[-1]:.5f} at r = 1e3", {"r": r, "ratio": ratio, "two_c_H": 2 * c_h}


# ----------------------------------------------------------------------
# 5-9: densities and the saddle point
# ----------------------------------------------------------------------
def thm22_regular(scale=1.0):
    m = _sym_model()
    c_h, _ = m.kernel.ell_asymptotic_constants()
    x = np.array([50.0, 100.0, 150.0, 200.0])
    ratios = {}
    for t in (1.0, 2.0):
        p, _ = density_fourier(m, t, x)
        ratios[t] = p * x**5 / (2.0 * c_h)
    band = (1.0 - 0.15 * scale, 1.0 + 0.15 * scale)
    in_band = bool(np.all((ratios[1.0] >= band[0]) & (ratios[1.0] <= band[1])))
    trend = _trend_ok(ratios[1.0], *band)
    t_dep = float(np.max(np.abs(ratios[2.0] / ratios[1.0] - 1.0)))
    ok = in_band and trend and t_dep <= 0.10 * scale
    summ = (f"p x^5 / 2c_H at t=1: {np.array2string(ratios[1.0], precision=4)}; "
            f"t=2 vs t=1 max rel {t_dep:.3f}")
    return ok, summ, {"x": x, "t=1": ratios[1.0], "t=2": ratios[2.0], "t_dependence": t_dep}


def decomposition(scale=1.0):
    m = _sym_model()
    x = np.array([-3.0, -1.0, 0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 15.0, 30.0])
    pc = compose_density(m, 1.0, x)
    pf, _ = density_fourier(m, 1.0, x)
    rel = np.abs(pc / pf - 1.0)
    ok = float(rel.max()) <= 1e-3 * scale
    return ok, f"max rel difference {rel.max():.2g} over 10 points", {"x": x, "compose": pc, "fourier": pf,
                                                                      "rel": rel}


def sandwich(scale=1.0, eps=0.5):
    m = _sym_model()
    lam, H = m.lambda_trunc, m.H
    details, ok = {}, True
    for t in (1.0, 2.0):
        x = np.array([50.0, 100.0, 150.0, 200.0]) * t ** (H + 0.5)
        lp, _ = log_tilde_p(m, t, x)
        B = x / (lam * t ** (H - 0.5)) * np.log(x / t ** (H + 0.5))
        ratio = lp / (-B)
        lo, hi = 1.0 - eps * scale, 1.0 + eps * scale
        details[f"t={t}"] = {"x": x, "log_p": lp, "ratio": ratio}
        ok &= bool(np.all((ratio >= lo) & (ratio <= hi)))
    r1 = details["t=1.0"]["ratio"]
    return ok, (f"ln p~ / (-(x/lambda) ln x) at t=1: {np.array2string(r1, precision=3)}; "
                f"allowed [{1 - eps * scale:g}, {1 + eps * scale:g}]"), details


def thm21(scale=1.0):
    m = Model(LevyMeasure(atoms=[(1.0, 1.0)]), 0.75)
    t = 5.0
    y = np.array([10.0, 15.0, 20.0])
    x = y * t ** (m.H + 0.5)
    exact, _ = density_fourier(m, t, x)
    asym = np.array([thm21_asymptote(m, t, xv) for xv in x])
    ratio = asym / exact
    ok = bool(0.75 / scale <= ratio[0] <= 1.33 * scale) and _trend_ok(ratio, 0.75 / scale, 1.33 * scale)
    return ok, f"asymptote / exact at y = 10, 15, 20: {np.array2string(ratio, precision=4)}", {"y": y,
                                                                                               "ratio": ratio}


def saddle(scale=1.0):
    m = Model(LevyMeasure(atoms=[(-1.0, 1.0)]), 0.25, lambda_trunc=1.0)
    rng = np.random.default_rng(7)
    worst_res, worst_scale = 0.0, 0.0
    H = m.H
    for _ in range(8):
        t = float(np.exp(rng.uniform(-1.0, 1.5)))
        x = float(np.exp(rng.uniform(math.log(3.0), math.log(1e5))))
        r = solve_saddle(m, t, x)
        r1 = solve_saddle(m, 1.0, x * t ** (-H - 0.5))
        worst_res = max(worst_res, r.residual / max(1.0, abs(x)))
        pred = t ** (0.5 - H) * r1.xi
        worst_scale = max(worst_scale, abs(r.xi / pred - 1.0))
    rep = saddle_asymptote_check(m, [1e3, 1e4, 1e5, 1e6])
    zr = rep.ratios("zeta_ratio")
    for row in rep.rows:
        worst_res = max(worst_res, row["residual"] / row["x"])
    ok = worst_res <= 1e-10 * scale and worst_scale <= 1e-8 * scale and abs(zr[-1] - 1.0) <= 0.20 * scale
    summ = (f"residual/max(1,x) {worst_res:.2g}; scaling rel {worst_scale:.2g}; "
            f"zeta lambda / ln x = {np.array2string(zr, precision=3)} at x = 1e3..1e6")
    return ok, summ, {"residual": worst_res, "scaling": worst_scale, "zeta_ratio": zr,
                      "D_ratio": rep.ratios("D_ratio"), "M2_ratio": rep.ratios("M2_ratio")}


# ----------------------------------------------------------------------
# 10-14: examples, sub-exponential tests, Monte Carlo, normalisation
# ----------------------------------------------------------------------
def ex41(scale=1.0):
    alpha = 1.5
    m = Model(two_sided_power(alpha, 1.0, 1.0), 0.25)
    r = 1e3
    prof = float(r * mathfrak_m(m, r))
    pred = float(profile_asymptote(m, r, alpha, 1.0, 1.0))
    rel_prof = abs(prof / pred - 1.0)
    rel_t = {}
    for t in (1.0, 2.0):
        a = float(ex41_asymptote(m, t, r, alpha, 1.0, 1.0))
        b = float(thm22_heavy_asymptote(m, t, r))
        rel_t[t] = abs(a / b - 1.0)
    factor = float(ex41_asymptote(m, 2.0, r, alpha, 1, 1) / ex41_asymptote(m, 1.0, r, alpha, 1, 1))
    want = 2.0 ** (1.0 - alpha * (0.5 - m.H))
    closed = abs(phi_integral(m.kernel, alpha, 1) / phi_integral_closed_form(m.kernel, alpha) - 1.0)
    ok = (rel_prof <= 0.15 * scale and max(rel_t.values()) <= 0.15 * scale
          and abs(factor / want - 1.0) <= 1e-12 and closed <= 1e-8 * scale)
    summ = (f"r m(r) vs combined asymptote rel {rel_prof:.2g}; ex41 vs heavy rel "
            f"{rel_t[1.0]:.2g} (t=1), {rel_t[2.0]:.2g} (t=2); t factor {factor:.6f} vs 2^0.625")
    return ok, summ, {"profile_rel": rel_prof, "t_rel": rel_t, "t_factor": factor, "closed_form_rel": closed}


def ex42(scale=1.0):
    m = Model(dyadic_example(0.25), 0.25)
    c = 1.0 / m.kernel.gamma_const
    n = np.arange(10, 21)
    ratio = np.array([mathfrak_m(m, (2.0**k - 1.0) * c) / mathfrak_m(m, 2.0**k * c) for k in n])
    ratio_ok = bool(np.all(np.abs(ratio / 0.5 - 1.0) <= 0.05 * scale))
    # gridded profile: the last point sits half a step past the jump at 2^12 c
    h = c / 8.0
    xs = c + h * np.arange(int(round((2.0**12 - 1.0) * 8)) + 5)
    g = mathfrak_m(m, xs)
    rep = subexp_test(g, xs, shifts=(c,))
    _, suspected = profile_shift_check(m)
    exists = check_existence(m.mu, m.H)
    regime = classify_tail_regime(m.mu, m.H)
    ok = ratio_ok and not rep.passes and suspected and exists and regime == TailRegime.EXTREMELY_HEAVY
    summ = (f"ratio range [{ratio.min():.4f}, {ratio.max():.4f}]; shift test fails: {not rep.passes}; "
            f"exists: {exists}; regime: {regime}")
    return ok, summ, {"n": n, "ratio": ratio, "shift_ratio_last": float(rep.shift_ratio[c][-1])}


def subexp(scale=1.0):
    h = 0.01
    x = 1.0 + h * np.arange(int(199.0 / h) + 1)
    pareto = 4.0 * x**-5.0
    rp = subexp_test(pareto, x)
    xe = h * np.arange(int(60.0 / h) + 1)
    rexp = subexp_test(np.exp(-xe), xe)
    conv_p = float(rp.conv_ratio[-1])
    ce = rexp.conv_ratio
    diverges = bool(ce[-1] > 20.0 and np.all(np.diff(ce) > 0))
    ok = (2.0 - 0.2 * scale) <= conv_p <= (2.0 + 0.2 * scale) and diverges
    return ok, f"Pareto conv ratio {conv_p:.4f} at x = 200; exponential conv ratio {ce[-1]:.1f} at x = 60", {
        "pareto_conv": rp.conv_ratio, "exp_conv": ce}


def monte_carlo(scale=1.0, n=1_000_000, seed=20240611):
    m = _sym_model()
    s = sample(m, 1.0, SimConfig(n_samples=n, seed=seed))
    bw = 0.05
    ed = empirical_density(s, bw)
    z = []
    for p0 in (-1.0, -0.5, 0.0, 0.5, 1.0):
        i = int(np.argmin(np.abs(ed.x - p0)))
        c = ed.x[i]
        # bin average of the exact density
        g = np.linspace(c - 0.5 * bw, c + 0.5 * bw, 41)
        pv, _ = density_fourier(m, 1.0, g)
        avg = float(integrate.simpson(pv, x=g) / bw)
        z.append((ed.density[i] - avg) / ed.se[i])
    z = np.array(z)
    coef = float(thm22_regular_asymptote(m, 1.0))  # A in A x^-p
    p_exp = m.kernel.p_large
    target = 100.0 / n
    x_star = (coef / ((p_exp - 1.0) * target)) ** (1.0 / (p_exp - 1.0))
    prob = coef * x_star ** (1.0 - p_exp) / (p_exp - 1.0)
    count = int(np.sum(s > x_star))
    se = math.sqrt(n * prob * (1.0 - prob))
    z_tail = (count - n * prob) / se
    ok = bool(np.all(np.abs(z) <= 3.0 * scale)) and abs(z_tail) <= 3.0 * scale
    summ = (f"bulk z-scores {np.array2string(z, precision=2)}; tail at x = {x_star:.3f}: "
            f"{count} exceedances vs {n * prob:.1f} from the asymptote (z = {z_tail:.2f})")
    return ok, summ, {"bulk_z": z, "x_star": x_star, "count": count, "expected": n * prob, "tail_z": z_tail}


def _tail_mass_regular(m, X):
    coef = float(thm22_regular_asymptote(m, 1.0))
    p = m.kernel.p_large
    return coef * X ** (1.0 - p) / (p - 1.0)


def _tail_mass_heavy(m, t, X):
    f = lambda v: float(thm22_heavy_asymptote(m, t, X * math.exp(v))) * X * math.exp(v)  # noqa: E731
    return sum(integrate.quad(f, a, b, limit=400, epsrel=1e-8)[0] for a, b in ((0, 3), (3, 10), (10, 60)))


def _battery_models():
    return [
        ("delta_1+delta_-1, H=1/4", Model(symmetric_atoms(), 0.25), "regular"),
        ("delta_-1, H=1/4", Model(LevyMeasure(atoms=[(-1.0, 1.0)]), 0.25), "regular"),
        ("delta_1, H=3/4", Model(LevyMeasure(atoms=[(1.0, 1.0)]), 0.75), "light"),
        ("dyadic, H=1/4", Model(dyadic_example(0.25), 0.25), "heavy"),
        ("two-sided alpha=1.5, H=1/4", Model(two_sided_power(1.5), 0.25), "heavy"),
    ]


def normalization(scale=1.0, t=1.0):
    details, ok = {}, True
    for label, m, kind in _battery_models():
        X = 200.0 if kind != "light" else 60.0
        law = FourierLaw(m, t, x_reach=X / m.chi(t))
        N = int(round(law.period / 0.01))
        dx = law.period / N * m.chi(t)
        n = int(2 * X / dx) + 1
        xs = -X + dx * np.arange(n)
        p = law.grid(xs[0], dx, n)
        mass = float(integrate.simpson(p, x=xs))
        lo_x, hi_x = -xs[0], xs[-1]
        if kind == "regular":
            tails = _tail_mass_regular(m, hi_x) + _tail_mass_regular(m, lo_x)
        elif kind == "heavy":
            mirror = Model(m.mu.reflected(), m.H)
            tails = _tail_mass_heavy(m, t, hi_x) + _tail_mass_heavy(mirror, t, lo_x)
        else:
            tails = 0.0  # light tails: below e^-40 beyond the window
        total = mass + tails
        details[label] = {"grid_mass": mass, "tail_mass": tails, "total": total}
        ok &= abs(total - 1.0) <= 1e-3 * scale
    worst = max(abs(v["total"] - 1.0) for v in details.values())
    return ok, f"max |mass - 1| = {worst:.2g} over {len(details)} models", details


CHECKS: dict[str, tuple[int, Callable]] = {
    "kernel_scaling": (1, kernel_scaling),
    "ell_closed_form": (2, ell_closed_form),
    "lemma32": (3, lemma32),
    "lemma33": (4, lemma33),
    "thm22_regular": (5, thm22_regular),
    "decomposition": (6, decomposition),
    "sandwich": (7, sandwich),
    "thm21": (8, thm21),
    "saddle": (9, saddle),
    "ex41": (10, ex41),
    "ex42": (11, ex42),
    "subexp": (12, subexp),
    "monte_carlo": (13, monte_carlo),
    "normalization": (14, normalization),
}


def check_names():
    return list(CHECKS)


def run_one(name: str, scale=1.0) -> CriterionResult:
    if name not in CHECKS:
        raise ConfigError(f"unknown check {name!r}; known: {', '.join(CHECKS)}")
    number, fn = CHECKS[name]
    t0 = time.perf_counter()
    ok, summary, details = fn(scale)
    return CriterionResult(number, name, bool(ok), summary, details, time.perf_counter() - t0)


def run_battery(only=None, scale=1.0, progress: Callable[[CriterionResult], None] | None = None):
    names = list(CHECKS) if not only else list(only)
    for nm in names:
        if nm not in CHECKS:
            raise ConfigError(f"unknown check {nm!r}; known: {', '.join(CHECKS)}")
    out = []
    for nm in names:
        res = run_one(nm, scale)
        if progress is not None:
            progress(res)
        out.append(res)
    return out
