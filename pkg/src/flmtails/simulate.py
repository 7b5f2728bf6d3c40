"""Monte Carlo sampler of the process at a fixed time, for validating densities and tails.

Each sample is a compound Poisson sum ``sum_j f(t, S_j) U_j`` over jumps with
``|U_j| > eps`` and times in a window ``[s_min, t]``, shifted by the
compensator of the jumps with ``eps < |u| <= 1``.  In ``gaussian_substitute``
mode the jumps below ``eps`` are replaced by a centred normal of the same
variance.

Samples are drawn in fixed-size blocks.  Block ``b`` is seeded from
``SeedSequence(seed).spawn`` so the output does not depend on the thread count.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from ._kernels import configure_threads
from ._validation import ConfigError, DivergenceError, DomainError, check_positive
from .charfn import Model
from .levy_measure import DyadicAtoms, PowerPiece, check_existence

__all__ = [
    "SimConfig",
    "JumpTable",
    "sample",
    "choose_s_min",
    "EmpiricalDensity",
    "empirical_density",
    "write_samples",
    "read_samples",
]

SMALL_JUMP_MODES = ("drop_compensated", "gaussian_substitute")
SINGULAR_GAP = 1e-12
WINDOW_VARIANCE_FRACTION = 1e-6
MAX_JUMPS_PER_SAMPLE = 1e7


@dataclass(frozen=True)
class SimConfig:
    """Sampler settings.  ``s_min = None`` picks the window from the variance proxy."""

    n_samples: int = 100_000
    s_min: Optional[float] = None
    jump_floor: float = 0.5
    seed: int = 0
    small_jump_mode: str = "drop_compensated"
    block_size: int = 4096

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples <= 0:
            raise ConfigError("n_samples must be a positive integer")
        if self.s_min is not None and not (math.isfinite(self.s_min) and self.s_min < 0):
            raise ConfigError("s_min must be finite and negative")
        if not (math.isfinite(self.jump_floor) and self.jump_floor > 0):
            raise ConfigError("jump_floor must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.small_jump_mode not in SMALL_JUMP_MODES:
            raise ConfigError(f"small_jump_mode must be one of {SMALL_JUMP_MODES}")
        if int(self.block_size) <= 0:
            raise ConfigError("block_size must be positive")


# ----------------------------------------------------------------------
# jump-size law restricted to |u| > eps
# ----------------------------------------------------------------------
@dataclass
class JumpTable:
    """Jump sizes as segments of ``|u|`` with a power-law shape inside each.

    Segment ``k`` covers ``[lo_k, hi_k]`` on side ``sign_k`` with mass ``mass_k``;
    its tail mass behaves like ``r^{-beta_k}``.  Atoms have ``lo == hi``.
    """

    lo: np.ndarray
    hi: np.ndarray
    beta: np.ndarray
    sign: np.ndarray
    mass: np.ndarray

    @property
    def total(self) -> float:
        return float(self.mass.sum())

    def cumulative(self) -> np.ndarray:
        c = np.cumsum(self.mass)
        return c / c[-1] if len(c) else c


def _piece_segments(p, eps, rel_tail=1e-15, ratio=1.05):
    """Split a density piece above ``eps`` into power-law segments."""
    a, b = max(p.amin, eps), p.amax
    if a >= b:
        return []
    if isinstance(p, PowerPiece):
        return [(a, b, p.alpha, p.sign, p.mass_above(a))]
    dens = lambda r: float(p._shape(r))  # noqa: E731
    total, _ = p.integrate(lambda u: 1.0, a, b)
    segs = []
    lo = a
    while lo < b:
        hi = min(lo * ratio, b)
        m, _ = p.integrate(lambda u: 1.0, lo, hi)
        d_lo, d_hi = dens(lo), dens(hi)
        if d_lo > 0 and d_hi > 0:
            beta = -1.0 - math.log(d_hi / d_lo) / math.log(hi / lo)
        else:
            beta = 0.0
        if m > 0:
            segs.append((lo, hi, beta, p.sign, m))
        if math.isinf(b):
            rest, _ = p.integrate(lambda u: 1.0, hi, math.inf)
            if rest <= rel_tail * total:
                break
        lo = hi
    return segs


def jump_table(mu, eps) -> JumpTable:
    """Segments for the jumps with ``|u| > eps``."""
    rows = [(abs(loc), abs(loc), 0.0, math.copysign(1.0, loc), m) for loc, m in mu.atoms if abs(loc) > eps]
    for p in mu.pieces:
        if isinstance(p, DyadicAtoms):
            # atom masses fall at least like 2^-k, so k <= 60 leaves < 1e-18
            locs, ms = p.atoms(60)
            rows += [(abs(x), abs(x), 0.0, p.sign, m) for x, m in zip(locs, ms) if abs(x) > eps]
        else:
            rows += _piece_segments(p, eps)
    if not rows:
        z = np.zeros(0)
        return JumpTable(z, z, z, z, z)
    arr = np.array(rows, dtype=float)
    return JumpTable(*(arr[:, i].copy() for i in range(5)))


def _small_jump_moments(mu, eps):
    """``int_{eps<|u|<=1} u mu(du)`` and ``int_{|u|<=eps} u^2 mu(du)``."""
    locs, ms = mu.all_atoms(1.0)
    big = np.abs(locs) > eps
    drift = float(np.sum(ms[big] * locs[big]))
    var = float(np.sum(ms[~big] * locs[~big] ** 2))
    for p in mu.density_pieces:
        if eps < 1.0:
            drift += p.integrate(lambda u: u, eps, 1.0, mu.epsabs, mu.epsrel)[0]
        var += p.integrate(lambda u: u * u, 0.0, eps, mu.epsabs, mu.epsrel)[0]
    return drift, var


# ----------------------------------------------------------------------
# window
# ----------------------------------------------------------------------
def choose_s_min(kernel, fraction=WINDOW_VARIANCE_FRACTION) -> float:
    """Most recent ``sigma_min`` (in units of ``t``) whose left remainder of ``int f^2`` is below ``fraction``."""
    total = kernel.f_squared_integral()
    lo, hi = 1.0, 2.0
    while kernel.f_squared_integral(-math.inf, -hi) > fraction * total:
        lo, hi = hi, 2.0 * hi
        if hi > 1e15:
            raise DomainError("no finite window meets the variance target")
    for _ in range(60):
        mid = math.sqrt(lo * hi)
        if kernel.f_squared_integral(-math.inf, -mid) > fraction * total:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-6:
            break
    return -hi


# ----------------------------------------------------------------------
# compiled sampler
# ----------------------------------------------------------------------
@numba.njit(cache=True)
def _kernel_unit(sigma, e, inv_gamma):
    if sigma >= 1.0:
        return 0.0
    if sigma >= 0.0:
        return (1.0 - sigma) ** e * inv_gamma
    v = -sigma
    return v**e * math.expm1(e * math.log1p(1.0 / v)) * inv_gamma


@numba.njit(cache=True)
def _draw_size(cum, lo, hi, beta, sign):
    k = np.searchsorted(cum, np.random.random_sample(), side="right")
    if k >= cum.shape[0]:
        k = cum.shape[0] - 1
    a = lo[k]
    b = hi[k]
    if a == b:
        return sign[k] * a
    v = np.random.random_sample()
    bk = beta[k]
    if abs(bk) < 1e-12:
        r = a * math.exp(v * math.log(b / a))
    else:
        ta = a ** (-bk)
        tb = 0.0 if math.isinf(b) else b ** (-bk)
        r = (ta - v * (ta - tb)) ** (-1.0 / bk)
    return sign[k] * r


@numba.njit(cache=True)
def _fill_block(out, start, stop, seed, rate, s_lo, e, inv_gamma, short, cum, lo, hi, beta, sign,
                shift, gauss_sd):
    np.random.seed(seed)
    width = 1.0 - s_lo
    for i in range(start, stop):
        n = np.random.poisson(rate) if rate > 0 else 0
        acc = 0.0
        for _ in range(n):
            s = s_lo + width * np.random.random_sample()
            if short:
                while abs(s) < SINGULAR_GAP or abs(1.0 - s) < SINGULAR_GAP:
                    s = s_lo + width * np.random.random_sample()
            acc += _kernel_unit(s, e, inv_gamma) * _draw_size(cum, lo, hi, beta, sign)
        if gauss_sd > 0:
            acc += gauss_sd * np.random.standard_normal()
        out[i] = acc - shift


@numba.njit(parallel=True, cache=True)
def _sample_all(out, seeds, block, rate, s_lo, e, inv_gamma, short, cum, lo, hi, beta, sign, shift, gauss_sd):
    n = out.shape[0]
    n_blocks = seeds.shape[0]
    for b in numba.prange(n_blocks):
        start = b * block
        stop = min(start + block, n)
        _fill_block(out, start, stop, seeds[b], rate, s_lo, e, inv_gamma, short, cum, lo, hi, beta, sign,
                    shift, gauss_sd)


def _block_seeds(seed, n_blocks):
    children = np.random.SeedSequence(int(seed)).spawn(n_blocks)
    return np.array([c.generate_state(1, dtype=np.uint32)[0] for c in children], dtype=np.int64)


def sample(model: Model, t, cfg: SimConfig) -> np.ndarray:
    """Draw ``cfg.n_samples`` independent copies of the process at time ``t``.

    Work is done at unit time: a sample at ``t`` is ``t^{H-1/2}`` times a sum
    over jump times ``sigma = s / t`` with jump intensity ``t * mu``.
    """
    t = check_positive("t", t)
    mu = model.mu
    mu.require_nonzero()
    if not check_existence(mu, model.H):
        raise DivergenceError("the stochastic integral does not exist for this measure")
    ker = model.kernel
    eps = cfg.jump_floor
    sig_lo = cfg.s_min / t if cfg.s_min is not None else choose_s_min(ker)
    width = 1.0 - sig_lo

    table = jump_table(mu, eps)
    lam_eps = table.total
    if not math.isfinite(lam_eps):
        raise DomainError("mu(|u| > eps) must be finite")
    rate = t * lam_eps * width
    if rate > MAX_JUMPS_PER_SAMPLE:
        raise ConfigError(f"{rate:.3g} expected jumps per sample; raise jump_floor or shorten the window")

    drift, small_var = _small_jump_moments(mu, eps)
    # compensator of the kept jumps with |u| <= 1 over the window, at unit time
    int_f = float(ker.antiderivative(1.0) - ker.antiderivative(sig_lo))
    shift = t * drift * int_f
    gauss_sd = 0.0
    if cfg.small_jump_mode == "gaussian_substitute" and small_var > 0:
        gauss_sd = math.sqrt(t * small_var * ker.f_squared_integral(sig_lo, 1.0))

    configure_threads()
    n = int(cfg.n_samples)
    block = int(cfg.block_size)
    n_blocks = -(-n // block)
    out = np.empty(n)
    if len(table.mass):
        cum = table.cumulative()
        lo, hi, beta, sign = table.lo, table.hi, table.beta, table.sign
    else:
        cum = lo = hi = beta = sign = np.zeros(1)
        rate = 0.0
    _sample_all(out, _block_seeds(cfg.seed, n_blocks), block, rate, sig_lo, ker.e, 1.0 / ker.gamma_const,
                ker.short_memory, cum, lo, hi, beta, sign, shift, gauss_sd)
    return out * t**ker.e


# ----------------------------------------------------------------------
# density estimate
# ----------------------------------------------------------------------
@dataclass
class EmpiricalDensity:
    x: np.ndarray
    density: np.ndarray
    se: np.ndarray
    bandwidth: float
    n: int

    def mass(self) -> float:
        return float(np.sum(self.density) * self.bandwidth)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x,density,se\n")
        for row in zip(self.x, self.density, self.se):
            buf.write(",".join(format(float(v), ".17g") for v in row) + "\n")
        return buf.getvalue()


def empirical_density(samples, bandwidth, lo=None, hi=None, max_bins=2**22) -> EmpiricalDensity:
    """Box-kernel density on bins of width ``bandwidth`` with binomial standard errors.

    The grid spans ``[lo, hi]`` (default: the sample range); ``x`` holds the bin centres.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    n = samples.size
    if n < 10_000:
        raise DomainError("the density estimate needs at least 1e4 samples")
    bandwidth = float(bandwidth)
    if not (math.isfinite(bandwidth) and bandwidth > 0):
        raise DomainError("bandwidth must be positive")
    lo = float(samples.min()) if lo is None else float(lo)
    hi = float(samples.max()) if hi is None else float(hi)
    n_bins = max(1, int(math.ceil((hi - lo) / bandwidth)))
    if hi == lo + n_bins * bandwidth:
        n_bins += 1  # the maximum must fall inside the last bin
    if n_bins > max_bins:
        raise DomainError(f"{n_bins} bins exceed max_bins; pass lo and hi")
    idx = np.floor((samples - lo) / bandwidth).astype(np.int64)
    keep = (idx >= 0) & (idx < n_bins)
    counts = np.bincount(idx[keep], minlength=n_bins).astype(float)
    p = counts / n
    x = lo + (np.arange(n_bins) + 0.5) * bandwidth
    return EmpiricalDensity(x, p / bandwidth, np.sqrt(p * (1.0 - p) / n) / bandwidth, bandwidth, n)


# ----------------------------------------------------------------------
# export
# ----------------------------------------------------------------------
def write_samples(path, samples, fmt="binary"):
    """Write samples as little-endian float64 (``binary``) or one value per line (``csv``)."""
    samples = np.asarray(samples, dtype=float)
    if fmt == "binary":
        samples.astype("<f8").tofile(path)
    elif fmt == "csv":
        with open(path, "w") as fh:
            fh.write("sample\n")
            for v in samples:
                fh.write(format(float(v), ".17g") + "\n")
    else:
        raise ConfigError(f"unknown sample format {fmt!r}")


def read_samples(path, fmt="binary") -> np.ndarray:
    if fmt == "binary":
        return np.fromfile(path, dtype="<f8")
    if fmt == "csv":
        return np.loadtxt(path, skiprows=1, ndmin=1)
    raise ConfigError(f"unknown sample format {fmt!r}")
