"""Exact densities by Fourier inversion, the compound Poisson series and their composition.

The law at time ``t`` is handled in scaled units ``y = x / chi`` where its
exponent is ``t * kappa(z)`` for the image measure at ``t = 1``.  Inversion is
a trapezoid sum over ``z = k dz`` (``dz = 2 pi / L``), so its only errors are
aliasing from period ``L`` and the cut at ``z_max``; both are estimated and
returned.  Far tails of light-tailed laws go through an exponential tilt and
are returned as log densities.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gamma as gamma_fn

from ._kernels import invert_points
from ._validation import DomainError, RegimeError, SlowDecayError, check_positive
from .charfn import Model, m_t_density, mathfrak_m
from .image import DiscreteImage

__all__ = [
    "FourierLaw",
    "DensityGrid",
    "density_fourier",
    "tilde_p",
    "log_tilde_p",
    "rho_series",
    "compose_density",
    "subexp_test",
    "SubexpReport",
]

_LOG_TINY = 37.0  # |phi| below e^-37 (~1e-16) is treated as zero
_Z_CAP = 2.0e4


def _decay_constant(image, t):
    """``A`` with ``-Re(t kappa(z)) ~ A z^a`` as ``z -> inf``."""
    a = image.a_small
    C = image.small_constants().sum()
    return t * C * gamma_fn(1.0 - a) * math.cos(0.5 * math.pi * a) / a, a


class FourierLaw:
    """Time-``t`` law of the full or truncated process, ready for inversion.

    Parameters
    ----------
    model : Model
    t : float
    truncated : bool
        Keep only image jumps ``w <= lambda`` (the bounded-jump part).
    xi : float
        Exponential tilt in scaled units; ``0`` for none.  Needs a finite
        exponential moment, i.e. ``truncated`` or ``H > 1/2``.
    x_reach : float
        Largest ``|y - centre|`` at which the density will be evaluated;
        sets the period when no tilt is used.
    period, z_max : float, optional
        Overrides for ``L`` and the frequency cut.
    """

    def __init__(self, model: Model, t: float = 1.0, truncated: bool = False, xi: float = 0.0,
                 x_reach: float = 60.0, period: Optional[float] = None, z_max: Optional[float] = None,
                 q: int = 16, z_cap: float = _Z_CAP):
        self.model = model
        self.t = check_positive("t", t)
        self.chi = model.chi(self.t)
        self.truncated = bool(truncated)
        self.xi = float(xi)
        image = model.image
        self.image = image
        w_hi = model.lambda_trunc if truncated else math.inf
        if self.xi != 0.0 and not truncated and image.support()[1] == math.inf:
            raise DomainError("tilting needs jumps bounded above (truncated law or H > 1/2)")

        A, a = _decay_constant(image, self.t)
        self.decay_A, self.decay_a = A, a
        zm = (_LOG_TINY / A) ** (1.0 / a) if z_max is None else float(z_max)
        self.z_max = min(zm, z_cap)
        # fail before building a grid that cannot resolve the law
        if z_max is None and A * self.z_max**a < 27.0:
            raise SlowDecayError(
                f"|phi| ~ {math.exp(-A * self.z_max**a):.3g} at the frequency cap {self.z_max:.4g}; raise t"
            )
        h = q / self.z_max

        # a coarse image for moments and the centre of the tilted law
        coarse = DiscreteImage(image, w_hi=w_hi, w_cut=1e6, w_T=1e-6, h=math.inf, ratio=1.5, q=q)
        self._coarse = coarse
        if self.xi != 0.0:
            mean = self.t * coarse.cumulant(self.xi, 1)
            var = self.t * coarse.cumulant(self.xi, 2)
        else:
            mean, var = 0.0, self._variance_proxy(coarse)
        self.center = mean
        self.sd = math.sqrt(max(var, 1e-300))
        if period is None:
            if self.xi != 0.0:
                period = 40.0 * self.sd + 80.0 / abs(self.xi) + 10.0
            else:
                period = self._heavy_period(x_reach)
        self.period = float(period)
        self.dz = 2.0 * math.pi / self.period
        nz = int(math.ceil(self.z_max / self.dz)) + 1
        self.z = np.arange(nz) * self.dz

        w_T = min(1e-6, 0.02 / max(self.z_max, abs(self.xi), 1.0))
        if self.xi == 0.0:
            w_cut = max(0.9 * self.period, 1.0)
            w_lo = None
        else:
            # below w_lo the tilt factor e^{xi w} is under e^-45: keep only mass and drift there
            w_cut = 1e6
            w_lo = -max(45.0 / abs(self.xi), 10.0)
        uniform_from = 4.0 if (self.xi == 0.0 and w_cut > 8.0) else None
        self.disc = DiscreteImage(image, w_hi=w_hi, w_cut=w_cut, w_T=w_T, h=h, q=q,
                                  uniform_from=uniform_from, period=self.period, w_lo=w_lo)
        kind = "uniform" if uniform_from is not None else "direct"
        kappa = self.disc.exponent(self.z, xi=self.xi, kind=kind, dz=self.dz)
        self.K = self.t * self.disc.cumulant(self.xi, 0) if self.xi != 0.0 else 0.0
        self.log_phi = self.t * kappa - self.K
        self.phi = np.exp(self.log_phi)
        self.phi_tail = float(abs(self.phi[-1]))
        if self.phi_tail > 1e-12:
            raise SlowDecayError(
                f"|phi| = {self.phi_tail:.3g} at the frequency cap {self.z_max:.4g}; raise t or z_max"
            )
        self._wz = np.full(nz, self.dz)
        self._wz[0] *= 0.5
        self._cut_bound = self._cutoff_bound()
        self._alias = None

    # ------------------------------------------------------------------
    def _variance_proxy(self, coarse):
        """Spread used to place the centre of the period window (finite even for heavy tails)."""
        ws, qi, qo = coarse.all_nodes()
        keep = np.abs(ws) < 10.0
        return float(self.t * np.sum((qi + qo)[keep] * ws[keep] ** 2)) + 1.0

    def _heavy_period(self, x_reach):
        ker = self.model.kernel
        p = ker.p_large if ker.short_memory else math.inf
        idx = self.model.mu.tail_index()
        if math.isfinite(idx):
            p = min(p, idx + 1.0)
        if math.isinf(p):
            return 2.0 * x_reach + 40.0 * self.sd + 20.0
        return (x_reach + 10.0) * (1.0 + 1e4 ** (1.0 / (p - 1.0)))

    def _cutoff_bound(self):
        """Bound on the neglected part ``(1/pi) int_{z_max}^inf |phi|``."""
        A, a = self.decay_A, self.decay_a
        zm = self.z_max
        return self.phi_tail / (math.pi * a * A * zm ** (a - 1.0))

    # ------------------------------------------------------------------
    def _q_xi(self, y):
        """Density of the (tilted) scaled law at ``y`` (array)."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return invert_points(self.z, self._wz, self.phi.real.copy(), self.phi.imag.copy(), y)

    def alias_level(self):
        """Density value half a period away from the centre: a proxy for the aliasing error."""
        if self._alias is None:
            self._alias = float(abs(self._q_xi(np.array([self.center + 0.5 * self.period]))[0]))
        return self._alias

    def error_floor(self):
        return self.alias_level() + self._cut_bound

    def log_pdf_scaled(self, y):
        """``(log q(y), abs error of q_xi)`` in scaled units."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        qx = self._q_xi(y)
        with np.errstate(divide="ignore", invalid="ignore"):
            lq = np.where(qx > 0, np.log(np.abs(qx)), -np.inf)
        return self.K - self.xi * y + lq, qx

    def pdf(self, x):
        """``(p_t(x), err)`` at the points ``x``; the law is in original units."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = x / self.chi
        if self.xi == 0.0:
            qv = self._q_xi(y)
            err = np.full(qv.shape, self.error_floor())
            return qv / self.chi, err / self.chi
        lq, qx = self.log_pdf_scaled(y)
        scale = np.exp(self.K - self.xi * y) / self.chi
        return np.exp(lq) / self.chi, self.error_floor() * scale

    def log_pdf(self, x):
        """``(log p_t(x), relative error)``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = x / self.chi
        lq, qx = self.log_pdf_scaled(y)
        with np.errstate(divide="ignore"):
            rel = self.error_floor() / np.abs(qx)
        return lq - math.log(self.chi), rel

    def grid(self, x0, dx, n):
        """Density on ``x0 + dx * arange(n)`` (original units) by one FFT."""
        if self.xi != 0.0:
            raise DomainError("grid inversion is provided for untilted laws only")
        dy = dx / self.chi
        y0 = x0 / self.chi
        N = int(round(self.period / dy))
        if abs(N * dy - self.period) > 1e-9 * self.period:
            raise DomainError("grid spacing must divide the period")
        coef = self._wz * self.phi * np.exp(-1j * self.z * y0)
        folded = np.zeros(N, dtype=complex)
        np.add.at(folded, np.arange(self.z.size) % N, coef)
        vals = np.fft.fft(folded).real / math.pi
        idx = np.arange(n) % N
        return vals[idx] / self.chi

    def exponent(self, z):
        """``t kappa(z)`` on the engine's own frequency grid (for diagnostics)."""
        return self.log_phi + self.K


# ----------------------------------------------------------------------


@dataclass
class DensityGrid:
    t: float
    x_values: np.ndarray
    p_values: np.ndarray
    err_values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x_values = np.asarray(self.x_values, dtype=float)
        self.p_values = np.asarray(self.p_values, dtype=float)
        self.err_values = np.asarray(self.err_values, dtype=float)
        if not (self.x_values.shape == self.p_values.shape == self.err_values.shape):
            raise DomainError("x, p and err must have equal length")
        if np.any(np.diff(self.x_values) < 0):
            raise DomainError("x values must be sorted")

    def mass(self):
        return float(np.trapezoid(self.p_values, self.x_values))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "p", "err"])
        for row in zip(self.x_values, self.p_values, self.err_values):
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def to_json(self) -> str:
        body = {
            "t": _fmt(self.t),
            "x": [_fmt(v) for v in self.x_values],
            "p": [_fmt(v) for v in self.p_values],
            "err": [_fmt(v) for v in self.err_values],
        }
        return json.dumps(body)

    @classmethod
    def from_csv(cls, text, t):
        rows = list(csv.reader(io.StringIO(text)))[1:]
        arr = np.array([[float(v) for v in r] for r in rows]).reshape(-1, 3)
        return cls(t, arr[:, 0], arr[:, 1], arr[:, 2])

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(float(d["t"]), [float(v) for v in d["x"]], [float(v) for v in d["p"]],
                   [float(v) for v in d["err"]])


def _fmt(v) -> str:
    return format(float(v), ".17g")


# ----------------------------------------------------------------------


def density_fourier(model: Model, t, x, **kw):
    """``(p_t(x), err)`` of the full law by Fourier inversion.

    Uses a tilt automatically for points far in a light tail when ``H > 1/2``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if model.kernel.short_memory or "xi" in kw:
        reach = float(np.max(np.abs(x))) / model.chi(t) if x.size else 1.0
        law = FourierLaw(model, t, x_reach=max(reach, 10.0), **kw)
        return law.pdf(x)
    return _light_tail_density(model, t, x, truncated=False, **kw)


def _light_tail_density(model: Model, t, x, truncated, **kw):
    """Pointwise densities through per-point saddle tilts (bounded-above jumps)."""
    from .saddle import solve_saddle_scaled

    vals = np.empty(x.shape)
    errs = np.empty(x.shape)
    chi = model.chi(t)
    base = None
    for i, xv in enumerate(x):
        y = xv / chi
        xi = solve_saddle_scaled(model, t, y, truncated=truncated)
        if xi < 0.5:
            if base is None:
                base = FourierLaw(model, t, truncated=truncated, x_reach=max(10.0, abs(y) + 10.0), **kw)
            p, e = base.pdf(np.array([xv]))
        else:
            law = FourierLaw(model, t, truncated=truncated, xi=xi, **kw)
            p, e = law.pdf(np.array([xv]))
        vals[i], errs[i] = p[0], e[0]
    return vals, errs


def log_tilde_p(model: Model, t, x):
    """``(log p~_t(x), relative error)`` using the saddle tilt for each point."""
    from .saddle import solve_saddle_scaled

    _require_short(model)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(x.shape)
    rel = np.empty(x.shape)
    chi = model.chi(t)
    for i, xv in enumerate(x):
        xi = solve_saddle_scaled(model, t, xv / chi, truncated=True)
        law = FourierLaw(model, t, truncated=True, xi=max(xi, 0.0))
        lp, r = law.log_pdf(np.array([xv]))
        out[i], rel[i] = lp[0], r[0]
    return out, rel


def tilde_p(model: Model, t, x, **kw):
    """``(p~_t(x), err)``: density of the truncated part (no shift)."""
    _require_short(model)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    reach = float(np.max(np.abs(x))) / model.chi(t) if x.size else 1.0
    law = FourierLaw(model, t, truncated=True, x_reach=max(reach, 10.0), **kw)
    return law.pdf(x)


def _require_short(model):
    if not model.kernel.short_memory:
        raise RegimeError("the truncated decomposition is used for H < 1/2 only")


def _m_t_on_grid(model: Model, t, x, direct_max=4096, ratio=1.005):
    """``m_t`` on a long sorted grid.

    Density pieces cost one quadrature per point, so for long grids the
    profile is evaluated on geometric nodes (split at its kinks) and
    interpolated by cubic splines in log-log coordinates.
    """
    if not model.image.pieces or x.size <= direct_max:
        return m_t_density(model, t, x)
    chi = model.chi(t)
    r = x / chi
    lo, hi = float(r[0]), float(r[-1])
    kinks = sorted({abs(b) for b in model.image.breakpoints() if lo < abs(b) < hi})
    out = np.empty(r.shape)
    for a, b in zip([lo] + kinks, kinks + [hi]):
        sel = (r >= a) & (r <= b)
        if not sel.any():
            continue
        k = max(int(math.ceil(math.log(b / a) / math.log(ratio))), 8)
        nodes = np.geomspace(a, b, k + 1)
        vals = mathfrak_m(model, nodes)
        if np.all(vals > 0):
            cs = CubicSpline(np.log(nodes), np.log(vals))
            out[sel] = np.exp(cs(np.log(r[sel])))
        else:
            out[sel] = CubicSpline(np.log(nodes), vals)(np.log(r[sel]))
    return t ** (1.5 - model.H) * out


def _rho_raw(model: Model, t, h, x_top, tol=1e-10, n_max=None, keep_terms=False):
    """Compound Poisson density on ``arange(n) * h`` with a half value at the jump node."""
    edge = model.lambda_trunc * model.chi(t)
    j_edge = edge / h
    if abs(j_edge - round(j_edge)) > 1e-9 * max(1.0, j_edge):
        raise DomainError("lambda chi must be a multiple of the grid spacing")
    j_edge = int(round(j_edge))
    x_top = max(x_top, edge) * 4.0 + 50.0 * edge
    n = 1 << int(math.ceil(math.log2(x_top / h + 1)))
    xs = np.arange(n) * h
    m = np.zeros(n)
    above = xs > edge * (1 + 1e-12)
    m[above] = _m_t_on_grid(model, t, xs[above])
    # trapezoid weight at the jump of m_t
    m[j_edge] = 0.5 * float(m_t_density(model, t, edge * (1 + 1e-12)))
    lam_t = model.Lambda_t(t)
    mhat = np.fft.rfft(m * h)
    # Poisson tail: sum_{k>K} (t Lambda)^k / k! below tol
    K, term, tail = 0, 1.0, math.expm1(lam_t)
    while tail * math.exp(-lam_t) > tol and K < 10_000:
        K += 1
        term *= lam_t / K
        tail -= term
    if n_max is not None:
        K = min(K, n_max)
    acc = np.zeros_like(mhat)
    power = np.ones_like(mhat)
    terms = []
    for k in range(1, K + 1):
        power = power * mhat / k
        acc += power
        if keep_terms:
            terms.append(np.fft.irfft(power, n) / h * math.exp(-lam_t))
    rho = np.fft.irfft(acc, n) / h * math.exp(-lam_t)
    return xs, rho, j_edge, K, terms


def rho_series(model: Model, t, x_grid, h=None, tol=1e-10, n_max=None, return_terms=False):
    """Density of the big-jump compound Poisson part on ``x_grid``.

    Grid points must be multiples of ``h`` and the jump threshold
    ``lambda chi`` must be a multiple of ``h`` (``h`` defaults to a 64th of
    it).  Convolution powers are formed by FFT on a padded grid with a
    trapezoid weight at the jump of ``m_t``.  The series is cut once the
    Poisson tail bound falls below ``tol``.  With ``return_terms`` the
    individual terms ``e^{-t Lambda} m_t^{*k} / k!`` on the internal grid are
    returned as well.
    """
    _require_short(model)
    t = check_positive("t", t)
    edge = model.lambda_trunc * model.chi(t)
    x_grid = np.asarray(x_grid, dtype=float)
    if h is None:
        h = edge / 64.0
    if x_grid.size:
        steps = x_grid / h
        if np.any(np.abs(steps - np.round(steps)) > 1e-6):
            raise DomainError("x_grid must lie on multiples of h")
    x_top = float(x_grid.max()) if x_grid.size else edge
    xs, rho, j_edge, K, terms = _rho_raw(model, t, h, x_top, tol, n_max, return_terms)
    n = xs.size
    idx = np.round(x_grid / h).astype(int)
    out = np.where((idx >= 0) & (idx < n), rho[np.clip(idx, 0, n - 1)], 0.0)
    out = np.where(x_grid <= edge * (1 + 1e-12), 0.0, out)
    if return_terms:
        return out, K, (xs, terms)
    return out


def compose_density(model: Model, t, x, h_factor=64, y_extra=400.0, richardson=True):
    """``p_t(x)`` from ``p~`` and the compound Poisson part.

    ``p_t(x) = e^{-t Lambda} p~_t(x + a) + int rho_t(y) p~_t(x - y + a) dy``.
    The grid error is second order in the spacing ``lambda chi / h_factor``;
    with ``richardson`` the result is extrapolated from that spacing and its half.
    """
    if richardson:
        coarse = compose_density(model, t, x, h_factor, y_extra, richardson=False)
        fine = compose_density(model, t, x, 2 * h_factor, y_extra, richardson=False)
        return (4.0 * fine - coarse) / 3.0
    _require_short(model)
    t = check_positive("t", t)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    edge = model.lambda_trunc * model.chi(t)
    h = edge / h_factor
    shift = model.a(t)
    y_max = float(np.max(x)) + y_extra * max(1.0, model.chi(t))
    law = FourierLaw(model, t, truncated=True, x_reach=y_max)
    # the grid spacing must divide the period: nudge the period
    L_steps = int(math.ceil(law.period / h))
    law = FourierLaw(model, t, truncated=True, x_reach=y_max, period=L_steps * h)
    n_y = int(math.ceil(y_max / h)) + 1
    y_grid = np.arange(n_y) * h
    _, rho_all, _, _, _ = _rho_raw(model, t, h, y_max)
    rho = rho_all[:n_y]
    lam_t = model.Lambda_t(t)
    # the jump node of rho already carries its trapezoid half weight
    wts = np.full(n_y, h)
    wts[-1] *= 0.5
    out = np.empty(x.shape)
    for i, xv in enumerate(x):
        # p~ at (xv + a) - y_j, j = 0..n_y-1, as a descending grid
        start = xv + shift - y_grid[-1]
        ptil = law.grid(start, h, n_y)[::-1]
        direct = float(law.pdf(np.array([xv + shift]))[0][0])
        out[i] = math.exp(-lam_t) * direct + float(np.sum(rho * ptil * wts))
    return out


# ----------------------------------------------------------------------


@dataclass
class SubexpReport:
    x: np.ndarray
    conv_ratio: np.ndarray
    shift_ratio: dict
    passes: bool

    def as_rows(self):
        rows = []
        for i, xv in enumerate(self.x):
            row = {"x": float(xv), "conv_ratio": float(self.conv_ratio[i])}
            for y, r in self.shift_ratio.items():
                row[f"shift_{y:g}"] = float(r[i])
            rows.append(row)
        return rows


def subexp_test(g: np.ndarray, x_grid: np.ndarray, x_max=None, shifts: Sequence[float] = (1.0, 5.0, 10.0),
                conv_tol=0.1, shift_tol=0.05, n_report=20):
    """Convolution and shift ratios of a gridded density on a uniform grid.

    ``(g*g)(x)/g(x)`` should approach 2 and ``g(x-y)/g(x)`` should approach 1
    for a sub-exponential density.  ``passes`` checks both at the last
    reported point within ``conv_tol`` and ``shift_tol``.
    """
    g = np.asarray(g, dtype=float)
    x_grid = np.asarray(x_grid, dtype=float)
    if g.shape != x_grid.shape or g.size < 3:
        raise DomainError("g and x_grid must be equal-length arrays")
    if np.any(g < 0):
        raise DomainError("g must be nonnegative")
    h = x_grid[1] - x_grid[0]
    if not np.allclose(np.diff(x_grid), h, rtol=1e-9, atol=0):
        raise DomainError("x_grid must be uniform")
    x0 = x_grid[0]
    n = g.size
    wts = np.full(n, h)
    wts[0] *= 0.5
    wts[-1] *= 0.5
    if x_max is None:
        x_max = x_grid[-1]
    # (g*g)(x) lives on 2 x0 + k h; direct summation keeps relative accuracy in light tails
    conv = np.convolve(g * wts, g)[:n]
    conv_x = 2 * x0 + np.arange(n) * h
    targets = np.linspace(max(conv_x[0], x0 + max(shifts)), x_max, n_report)
    targets = targets[targets <= min(x_max, x_grid[-1])]
    gi = np.interp(targets, x_grid, g)
    conv_at = np.interp(targets, conv_x, conv)
    with np.errstate(divide="ignore", invalid="ignore"):
        conv_ratio = conv_at / gi
        shift = {float(y): np.interp(targets - y, x_grid, g) / gi for y in shifts}
    last_ok = abs(conv_ratio[-1] - 2.0) <= conv_tol * 2.0 and all(abs(r[-1] - 1.0) <= shift_tol for r in shift.values())
    return SubexpReport(targets, conv_ratio, shift, bool(last_ok))
