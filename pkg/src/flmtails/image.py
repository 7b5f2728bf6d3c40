"""Image of ``mu(du) ds`` on ``u != 0, s < 1`` under ``(s, u) -> f(s) u``.

Everything about the exponent at ``t = 1`` is an integral against this
measure ``N(dw) = n(w) dw``; other times follow by scaling.  The density is
kept in two parts, ``n_in`` from jumps with ``|u| <= 1`` (which carry the
compensator) and ``n_out`` from ``|u| > 1``.

:class:`DiscreteImage` turns ``N`` into Gauss-Legendre atoms plus analytic
corrections near ``w = 0`` and beyond a far cut-off.  Its exponent is the
exact exponent of a slightly perturbed law, which is what makes the Fourier
inversion downstream accurate far into the tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline

from ._kernels import composite_rule, exponent_direct, gauss_legendre01
from ._validation import DivergenceError, DomainError
from .kernel import Kernel
from .levy_measure import DyadicAtoms, LevyMeasure

__all__ = ["ImageMeasure", "DiscreteImage", "geometric_edges"]

# dyadic atoms beyond this size add less than 1e-16 to any quantity used here
_ATOM_CAP = 2.0**80


def geometric_edges(a, b, ratio=2.0, hmax=np.inf, grade_top=False, top_min=None):
    """Panel edges on ``[a, b]`` (``0 < a < b``) growing geometrically from ``a``.

    Panels are split further so that none is wider than ``hmax``.  With
    ``grade_top`` the panels also shrink geometrically toward ``b`` down to a
    width of ``top_min``.
    """
    if not 0 < a < b:
        raise ValueError("need 0 < a < b")
    edges = [a]
    x = a
    while x < b:
        nxt = min(x * ratio, x + hmax, b)
        if nxt < b and (b - nxt) < 0.25 * (nxt - x):
            nxt = b
        edges.append(nxt)
        x = nxt
    edges = np.array(edges)
    if grade_top:
        mid = 0.5 * (a + b) if a < 0.5 * b else a
        gap = b - mid
        tmin = top_min if top_min is not None else 1e-10 * b
        top = [b]
        d = tmin
        while d < gap * 0.5:
            top.append(b - d)
            d *= ratio
        top = np.array(sorted(top))
        keep = edges[edges < top[0] - 0.25 * (top[0] - (b - 2 * d / ratio) if len(top) > 1 else 0)]
        keep = keep[keep < top[0]]
        edges = np.concatenate([keep, top])
        edges = np.unique(edges)
        # respect hmax on the merged set
        out = [edges[0]]
        for e in edges[1:]:
            gapw = e - out[-1]
            if gapw > hmax:
                n = int(math.ceil(gapw / hmax))
                out.extend(list(out[-1] + gapw * np.arange(1, n) / n))
            out.append(e)
        edges = np.array(out)
    return edges


def _split_edges(edges, breaks):
    """Insert breakpoints into a sorted edge array."""
    inside = [b for b in breaks if edges[0] < b < edges[-1]]
    return np.unique(np.concatenate([edges, inside]))


class ImageMeasure:
    """The measure ``N`` for a Levy measure and a kernel.

    Parameters
    ----------
    mu : LevyMeasure
    kernel : Kernel
    n_u_nodes : int
        Per-``w`` quadrature nodes in ``log|u|`` used for density pieces.
    """

    def __init__(self, mu: LevyMeasure, kernel: Kernel, n_u_panels: int = 40, u_order: int = 12):
        mu.require_nonzero()
        for p in mu.density_pieces:
            if p.touches_zero:
                raise DomainError("density pieces reaching u = 0 are not supported by the image-measure engine")
        self.mu = mu
        self.kernel = kernel
        self.H = kernel.H
        self.n_u_panels = n_u_panels
        self.u_order = u_order
        locs, masses = mu.all_atoms(_ATOM_CAP)
        self.atom_u = locs
        self.atom_m = masses
        self.pieces = mu.density_pieces
        if not kernel.short_memory:
            heavy = np.any(np.abs(locs) > 1.0) or any(p.amax > 1.0 for p in self.pieces)
            if heavy:
                # int f(s) ds diverges at -inf for H > 1/2, so uncompensated
                # jumps with |u| > 1 make the stochastic integral diverge
                raise DivergenceError(
                    "for H > 1/2 the integral diverges when the Levy measure charges |u| > 1"
                )
        self._small = None

    # ------------------------------------------------------------------
    @property
    def a_small(self):
        return self.kernel.alpha_small

    def _nu(self, y):
        return self.kernel.image_density(y)

    def density_by_source(self, w):
        """Return ``(n_from_u_negative, n_from_u_positive)`` split further into (in, out).

        Output shape ``(2, 2, *w.shape)``: axis 0 is the sign of ``u`` (-, +),
        axis 1 the part (in: ``|u| <= 1``, out: ``|u| > 1``).
        """
        w = np.asarray(w, dtype=float)
        with np.errstate(all="ignore"):
            return self._density_by_source(w)

    def _density_by_source(self, w):
        out = np.zeros((2, 2) + w.shape)
        flat = w.ravel()
        res = out.reshape(2, 2, -1)
        for u, m in zip(self.atom_u, self.atom_m):
            y = flat / u
            ok = y != 0
            vals = np.zeros(flat.shape)
            vals[ok] = self._nu(y[ok]) * (m / abs(u))
            res[int(u > 0), int(abs(u) > 1.0)] += vals
        for piece in self.pieces:
            self._piece_contrib(piece, flat, res)
        return out

    def density_parts(self, w):
        """``(n_in(w), n_out(w))``."""
        d = self.density_by_source(w)
        return d[0, 0] + d[1, 0], d[0, 1] + d[1, 1]

    def density(self, w):
        d = self.density_by_source(w)
        return d.sum(axis=(0, 1))

    def _piece_contrib(self, piece, w, res):
        """Add ``int nu(w/u) mu_piece(u) du / |u|`` for every ``w`` (vectorised in log|u|)."""
        H, ker = self.H, self.kernel
        G = ker.gamma_const
        sgn_u = piece.sign
        a = self.a_small
        tail = piece.tail()
        aw = np.abs(w)
        nz = aw > 0
        for lo_u, hi_u, part in ((piece.amin, min(piece.amax, 1.0), 0), (max(piece.amin, 1.0), piece.amax, 1)):
            if not lo_u < hi_u:
                continue
            same = np.sign(w) == sgn_u
            lo = np.full(w.shape, lo_u)
            hi = np.full(w.shape, hi_u)
            if ker.short_memory:
                # positive branch needs |u| <= |w| Gamma; the negative branch takes all |u|
                hi = np.where(same, np.minimum(hi, aw * G), hi)
            else:
                lo = np.where(same, np.maximum(lo, aw * G), lo)
                hi = np.where(same, hi, lo)  # opposite signs never meet for H > 1/2
            if math.isinf(hi_u):
                if tail is None:
                    raise DomainError("unbounded piece without tail metadata")
                if math.isinf(tail.index):
                    top = 60.0 / tail.exp_rate if tail.exp_rate < math.inf else 8.0 * getattr(piece, "scale", 1.0)
                    cap = lo_u + top
                    hi = np.where(np.isinf(hi), cap, hi)
                else:
                    decay = tail.index - a
                    if decay <= 0:
                        raise DivergenceError("the image measure diverges: tail index below 2/(3-2H)")
                    base = np.maximum(lo, np.where(aw > 0, aw, 1.0))
                    cap = base * np.exp(min(40.0 / decay, 600.0))
                    hi = np.where(np.isinf(hi), cap, hi)
            use = nz & (hi > lo)
            if not use.any():
                continue
            tlo = np.log(lo[use])
            thi = np.log(hi[use])
            g, gw = composite_rule(np.linspace(0.0, 1.0, self.n_u_panels + 1), self.u_order)
            span = thi - tlo
            tau = tlo[:, None] + span[:, None] * g[None, :]
            u = sgn_u * np.exp(tau)
            y = w[use][:, None] / u
            vals = self._nu(y.ravel()).reshape(y.shape)
            # int nu(w/u) rho(u) du/|u| = int nu(w/u) rho(u) dtau
            integrand = vals * piece.density(u)
            contrib = (integrand * gw[None, :]).sum(axis=1) * span
            res[int(sgn_u > 0), part, np.nonzero(use)[0]] += contrib

    # ------------------------------------------------------------------
    def breakpoints(self):
        """Locations in ``w`` where ``n`` jumps or kinks."""
        G = self.kernel.gamma_const
        pts = set()
        for u in self.atom_u:
            pts.add(u / G)
        for p in self.pieces:
            for b in (p.amin, p.amax, 1.0):
                if math.isfinite(b) and p.amin <= b <= p.amax:
                    pts.add(p.sign * b / G)
        return np.array(sorted(pts))

    def small_constants(self):
        """``C[side][part]`` with ``n_part(w) ~ C |w|^{-1-a}`` as ``w -> 0`` on ``side`` (0: w<0, 1: w>0)."""
        if self._small is not None:
            return self._small
        _, C = self.kernel.small_constant()
        a = self.a_small
        const = np.zeros((2, 2))
        short = self.kernel.short_memory
        for side in (0, 1):
            w_sign = 1.0 if side == 1 else -1.0
            # H < 1/2: small w comes from f -> 0^- so u has the opposite sign;
            # H > 1/2: f -> 0^+ so u has the same sign
            u_sign = -w_sign if short else w_sign
            for part, (lo, hi) in enumerate(((0.0, 1.0), (1.0, math.inf))):
                val = sum(m * abs(u) ** a for u, m in zip(self.atom_u, self.atom_m)
                          if np.sign(u) == u_sign and (abs(u) > 1.0) == bool(part))
                for p in self.pieces:
                    if p.sign == u_sign:
                        val += p.integrate(lambda uu: abs(uu) ** a, lo, hi)[0]
                const[side, part] = C * val
        self._small = const
        return const

    def small_moments(self, w_T, jmax=14):
        """Signed moments ``R[part, j] = int_{|w|<w_T} w^j n_part(w) dw`` from the small-w law."""
        C = self.small_constants()
        a = self.a_small
        R = np.zeros((2, jmax + 1))
        for j in range(1, jmax + 1):
            if j <= a:
                continue  # not integrable at 0; callers never need these
            base = w_T ** (j - a) / (j - a)
            for part in (0, 1):
                R[part, j] = base * (C[1, part] + (-1.0) ** j * C[0, part])
        return R

    def support(self):
        """Extent of ``N`` as ``(w_min, w_max)`` (infinite where unbounded)."""
        G = self.kernel.gamma_const
        if self.kernel.short_memory:
            has_pos = self.mu.has_side(1.0)
            has_neg = self.mu.has_side(-1.0)
            return (-math.inf if has_pos or has_neg else 0.0, math.inf)
        up = max([u for u in self.atom_u if u > 0] + [p.amax for p in self.pieces if p.sign > 0], default=0.0) / G
        lo = min([u for u in self.atom_u if u < 0] + [-p.amax for p in self.pieces if p.sign < 0], default=0.0) / G
        return lo, up

    # ------------------------------------------------------------------
    def discretize(self, **kw) -> "DiscreteImage":
        return DiscreteImage(self, **kw)


@dataclass
class _UniformBlock:
    sign: float
    A: float
    h: float
    P: int
    q_in: np.ndarray  # (P, q)
    q_out: np.ndarray
    w: np.ndarray  # (P, q)


class DiscreteImage:
    """Gauss-Legendre discretisation of ``N`` restricted to ``w_lo <= w <= w_hi``.

    Parameters
    ----------
    image : ImageMeasure
    w_hi : float
        Upper truncation (``lambda`` for the bounded-jump part, ``inf`` otherwise).
        It is a hard edge: ``n`` is cut there.
    w_cut : float
        Far cut-off.  Mass of ``N`` beyond ``|w| > w_cut`` is dropped as
        jumps while its compensator is kept.
    w_T : float
        Below ``|w| < w_T`` the measure enters through its small-w moments.
    h : float
        Maximal panel width; it sets the highest frequency integrated exactly
        (about ``q / h``).
    q : int
        Gauss-Legendre order.
    uniform_from : float or None
        Start of the uniform-panel region evaluated by FFT (``None`` disables it).
    period : float or None
        Inversion period ``L``; the uniform panel width is adjusted so that
        ``L / h`` is an integer, which is what makes the FFT evaluation exact.
    w_lo : float
        Lower truncation (default ``-w_cut``).
    """

    def __init__(self, image: ImageMeasure, w_hi=math.inf, w_cut=1e6, w_T=1e-6, h=0.25, q=16,
                 uniform_from=None, period=None, ratio=2.0, w_lo=None, grade_top=False, interpolate=None):
        self.image = image
        self.q = int(q)
        self.w_T = float(w_T)
        self.w_hi = float(w_hi)
        self.w_cut = float(w_cut)
        self.w_lo = -self.w_cut if w_lo is None else float(w_lo)
        sup_lo, sup_hi = image.support()
        top = min(self.w_hi, self.w_cut, sup_hi)
        bot = max(self.w_lo, sup_lo)
        brks = image.breakpoints()
        interpolate = bool(image.pieces) if interpolate is None else interpolate

        near_w, near_in, near_out = [], [], []
        self.blocks = []

        def add_direct(edges, sign):
            if len(edges) < 2:
                return
            nodes, wts = composite_rule(edges, self.q)
            w = sign * nodes
            n_in, n_out = self._density_parts(w, interpolate and False)
            near_w.append(w)
            near_in.append(n_in * wts)
            near_out.append(n_out * wts)

        for sign, end in ((1.0, top), (-1.0, -bot)):
            if end <= self.w_T:
                continue
            side_brk = sorted(abs(b) for b in brks if np.sign(b) == sign and self.w_T < abs(b) < end)
            if self.w_hi < math.inf and sign > 0 and self.w_hi > self.w_T:
                side_brk.append(self.w_hi)
            A = end
            if uniform_from is not None and uniform_from < end:
                A = max(uniform_from, self.w_T * 4)
            edges = geometric_edges(self.w_T, A, ratio=ratio, hmax=h,
                                    grade_top=(grade_top and sign > 0 and A == end and self.w_hi < math.inf))
            edges = _split_edges(edges, side_brk)
            add_direct(edges, sign)
            if A < end:
                self._uniform(sign, A, end, h, period, side_brk, add_direct, interpolate)

        self.near_w = np.concatenate(near_w) if near_w else np.zeros(0)
        self.near_in = np.concatenate(near_in) if near_in else np.zeros(0)
        self.near_out = np.concatenate(near_out) if near_out else np.zeros(0)

        self.R = image.small_moments(self.w_T)
        # far region dropped as jumps; keep its compensator and its "-1" term
        self.drop_mass, self.drop_first_in = self._far_tail(top, bot)
        self.total_in = self.near_in.sum() + sum(b.q_in.sum() for b in self.blocks)
        self.total_out = self.near_out.sum() + sum(b.q_out.sum() for b in self.blocks)

    # ------------------------------------------------------------------
    def _density_parts(self, w, interp):
        return self.image.density_parts(w)

    def _uniform(self, sign, A, end, h, period, breaks, add_direct, interpolate):
        if period is not None:
            M = int(math.ceil(period / h))
            h = period / M
        P = int(math.floor((end - A) / h))
        if P <= 0:
            add_direct(np.array([A, end]), sign)
            return
        g, gw = gauss_legendre01(self.q)
        starts = A + h * np.arange(P)
        w_abs = starts[:, None] + h * g[None, :]
        if interpolate:
            n_in, n_out = self._interp_parts(sign, A, A + P * h, breaks, w_abs.ravel())
        else:
            n_in, n_out = self.image.density_parts(sign * w_abs.ravel())
        n_in = n_in.reshape(w_abs.shape) * (h * gw)[None, :]
        n_out = n_out.reshape(w_abs.shape) * (h * gw)[None, :]
        # panels holding a breakpoint go to the direct list, split at the break
        for b in breaks:
            if A < b < A + P * h:
                p = int((b - A) // h)
                n_in[p] = 0.0
                n_out[p] = 0.0
                add_direct(np.array([starts[p], b, starts[p] + h]), sign)
        self.blocks.append(_UniformBlock(sign, A, h, P, n_in, n_out, sign * w_abs))
        tail_start = A + P * h
        if tail_start < end * (1 - 1e-15):
            add_direct(geometric_edges(tail_start, end, ratio=1.5, hmax=h), sign)

    def _interp_parts(self, sign, a, b, breaks, w_abs):
        """Piecewise log-log cubic interpolation of ``n`` between breakpoints."""
        seg = [a] + [x for x in breaks if a < x < b] + [b]
        n_in = np.zeros(w_abs.shape)
        n_out = np.zeros(w_abs.shape)
        for lo, hi in zip(seg[:-1], seg[1:]):
            k = max(int(40 * math.log(hi / lo)) + 16, 24)
            t = np.log(lo) + (np.log(hi) - np.log(lo)) * 0.5 * (1 - np.cos(np.pi * np.arange(k + 1) / k))
            xs = np.exp(t)
            d_in, d_out = self.image.density_parts(sign * xs)
            sel = (w_abs >= lo) & (w_abs <= hi)
            for arr, d in ((n_in, d_in), (n_out, d_out)):
                if np.all(d > 0):
                    cs = CubicSpline(t, np.log(d))
                    arr[sel] = np.exp(cs(np.log(w_abs[sel])))
                elif np.any(d > 0):
                    cs = CubicSpline(t, d)
                    arr[sel] = cs(np.log(w_abs[sel]))
        return n_in, n_out

    def _far_tail(self, top, bot):
        """Mass and in-part first moment of ``N`` on the dropped far region."""
        mass, first = 0.0, 0.0
        for sign, start in ((1.0, top), (-1.0, -bot)):
            if not math.isfinite(start) or start >= self.image_extent(sign):
                continue
            if sign > 0 and self.w_hi <= start and self.w_hi < math.inf:
                continue
            edges = geometric_edges(start, start * 1e8, ratio=1.3)
            nodes, wts = composite_rule(edges, 8)
            n_in, n_out = self.image.density_parts(sign * nodes)
            mass += np.sum((n_in + n_out) * wts)
            first += np.sum(sign * nodes * n_in * wts)
        return mass, first

    def image_extent(self, sign):
        lo, hi = self.image.support()
        return hi if sign > 0 else -lo

    # ------------------------------------------------------------------
    def exponent(self, z, xi=0.0, kind="uniform", dz=None):
        """``kappa(z - i xi)`` at real ``z`` for the discretised measure.

        ``kappa(zeta) = int (e^{i zeta w} - 1 - i zeta w 1_in) N(dw)``.  With
        ``kind="uniform"`` ``z`` must be ``k * dz`` for ``k = 0..len(z)-1``,
        and the uniform blocks are summed by FFT; ``kind="direct"`` accepts
        any ``z`` and sums every node.
        """
        z = np.asarray(z, dtype=float)
        xi = float(xi)
        re, im = exponent_direct(z, xi, self.near_w, self.near_in, self.near_out)
        out = re + 1j * im
        zeta = z - 1j * xi
        for b in self.blocks:
            if kind == "uniform":
                out += self._block_fft(b, z, xi, dz)
            else:
                w = b.w.ravel()
                r2, i2 = exponent_direct(z, xi, w, b.q_in.ravel(), b.q_out.ravel())
                out += r2 + 1j * i2
        # small-w moments
        iz = 1j * zeta
        for j in range(1, self.R.shape[1]):
            coef = iz**j / math.factorial(j)
            if j >= 2:
                out += coef * self.R[0, j]
            out += coef * self.R[1, j]
        out += -self.drop_mass - iz * self.drop_first_in
        return out

    def _block_fft(self, b: _UniformBlock, z, xi, dz):
        nz = z.size
        if dz is None:
            raise ValueError("uniform evaluation needs dz")
        M = int(round(2 * math.pi / (dz * b.h)))
        if abs(M * dz * b.h - 2 * math.pi) > 1e-9:
            raise ValueError("panel width and dz are not commensurate")
        g, _ = gauss_legendre01(self.q)
        k = np.arange(nz)
        zeta = z - 1j * xi
        tilt = np.exp(xi * b.w)
        total = np.zeros(nz, dtype=complex)
        for j in range(self.q):
            Q = (b.q_in[:, j] + b.q_out[:, j]) * tilt[:, j]
            if b.sign > 0:
                S = np.fft.ifft(Q, n=M) * M
            else:
                S = np.fft.fft(Q, n=M)
            phase = np.exp(1j * b.sign * z * (b.A + b.h * g[j]))
            total += phase * S[k % M]
        total -= b.q_in.sum() + b.q_out.sum()
        total -= 1j * zeta * np.sum(b.q_in * b.w)
        return total

    def cumulant(self, xi, k=0):
        """``d^k/dxi^k K(xi)`` with ``K(xi) = kappa(-i xi)`` (real, ``k = 0..``)."""
        xi = float(xi)
        ws, qi, qo = self.all_nodes()
        e = np.exp(xi * ws)
        if k == 0:
            with np.errstate(over="ignore"):
                em1 = np.expm1(xi * ws)
            main = np.sum(qi * _expm1_minus_id_vec(xi * ws)) + np.sum(qo * em1)
        elif k == 1:
            main = np.sum(qi * ws * np.expm1(xi * ws)) + np.sum(qo * ws * e)
        else:
            main = np.sum((qi + qo) * ws**k * e)
        rem = 0.0
        for j in range(1, self.R.shape[1]):
            if j < k:
                continue
            c = xi ** (j - k) / math.factorial(j - k)
            if j >= 2:
                rem += c * self.R[0, j]
            rem += c * self.R[1, j]
        if k == 0:
            rem += -self.drop_mass - xi * self.drop_first_in
        elif k == 1:
            rem += -self.drop_first_in
        return main + rem

    def all_nodes(self):
        ws = [self.near_w] + [b.w.ravel() for b in self.blocks]
        qi = [self.near_in] + [b.q_in.ravel() for b in self.blocks]
        qo = [self.near_out] + [b.q_out.ravel() for b in self.blocks]
        return np.concatenate(ws), np.concatenate(qi), np.concatenate(qo)


def _expm1_minus_id_vec(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 0.1
    xs = x[small]
    out[small] = xs * xs * (0.5 + xs * (1 / 6 + xs * (1 / 24 + xs * (1 / 120 + xs * (1 / 720 + xs / 5040)))))
    xl = x[~small]
    with np.errstate(over="ignore"):
        out[~small] = np.expm1(xl) - xl
    return out
