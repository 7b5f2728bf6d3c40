"""Compiled inner loops and Gauss-Legendre helpers."""

from __future__ import annotations

import functools
import os

import numba
import numpy as np


def configure_threads():
    """Cap numba's worker count by ``FLM_THREADS`` when it is set."""
    raw = os.environ.get("FLM_THREADS")
    if raw:
        try:
            n = max(1, int(raw))
        except ValueError:
            return
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


@functools.lru_cache(maxsize=None)
def gauss_legendre01(q: int):
    """Nodes and weights of the q-point Gauss-Legendre rule on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


def composite_rule(edges, q: int):
    """Composite GL rule on consecutive intervals given by ``edges``."""
    edges = np.asarray(edges, dtype=float)
    g, gw = gauss_legendre01(q)
    a, b = edges[:-1], edges[1:]
    nodes = (a[:, None] + (b - a)[:, None] * g[None, :]).ravel()
    weights = ((b - a)[:, None] * gw[None, :]).ravel()
    return nodes, weights


@numba.njit(cache=True, fastmath=False)
def _sin_minus_id(y):
    """sin(y) - y without cancellation."""
    if abs(y) < 0.1:
        y2 = y * y
        return -y * y2 * (1.0 / 6.0 - y2 * (1.0 / 120.0 - y2 * (1.0 / 5040.0 - y2 / 362880.0)))
    return np.sin(y) - y


@numba.njit(cache=True, fastmath=False)
def _expm1_minus_id(x):
    """exp(x) - 1 - x without cancellation."""
    if abs(x) < 0.1:
        s = 0.0
        term = x * x / 2.0
        k = 2
        while abs(term) > 1e-18 * abs(s) or k < 4:
            s += term
            k += 1
            term = term * x / k
        return s
    return np.expm1(x) - x


@numba.njit(cache=True, parallel=True)
def exponent_direct(z, xi, w, q_in, q_out):
    """Sum_k q_in (e^{i zeta w} - 1 - i zeta w) + q_out (e^{i zeta w} - 1), zeta = z - i xi."""
    nz = z.size
    nw = w.size
    out_re = np.zeros(nz)
    out_im = np.zeros(nz)
    ex = np.empty(nw)
    em1 = np.empty(nw)
    c2 = np.empty(nw)
    for k in range(nw):
        x = xi * w[k]
        ex[k] = np.exp(x)
        em1[k] = np.expm1(x)
        c2[k] = _expm1_minus_id(x)
    for i in numba.prange(nz):
        zi = z[i]
        sr = 0.0
        si = 0.0
        for k in range(nw):
            y = zi * w[k]
            sh = np.sin(0.5 * y)
            ch = np.cos(0.5 * y)
            one_minus_cos = 2.0 * sh * sh
            sy = 2.0 * sh * ch
            qi = q_in[k]
            qo = q_out[k]
            if qi != 0.0:
                sr += qi * (c2[k] - one_minus_cos * ex[k])
                si += qi * (em1[k] * sy + _sin_minus_id(y))
            if qo != 0.0:
                sr += qo * (em1[k] * (1.0 - one_minus_cos) - one_minus_cos)
                si += qo * ex[k] * sy
        out_re[i] = sr
        out_im[i] = si
    return out_re, out_im


@numba.njit(cache=True, parallel=True)
def invert_points(z, wz, phi_re, phi_im, x):
    """(1/pi) sum_k wz_k Re(phi_k e^{-i z_k x_j}) for every x_j."""
    nx = x.size
    out = np.zeros(nx)
    for j in numba.prange(nx):
        xj = x[j]
        s = 0.0
        for k in range(z.size):
            a = z[k] * xj
            s += wz[k] * (phi_re[k] * np.cos(a) + phi_im[k] * np.sin(a))
        out[j] = s / np.pi
    return out


@numba.njit(cache=True, error_model="numpy")
def _fneg_scalar(v, e, G):
    return v**e * np.expm1(e * np.log1p(1.0 / v)) / G


@numba.njit(cache=True, error_model="numpy")
def solve_neg(y, e, G):
    """``v > 0`` with ``f(-v) = y`` for each ``y < 0``: bracket in ``log v``, then safeguarded Newton."""
    out = np.empty(y.size)
    sgn = 1.0 if e < 0 else -1.0
    for i in range(y.size):
        yi = y[i]
        tau_far = np.log(G * yi / e) / (e - 1.0)
        tau_near = np.log(-G * yi) / e if e < 0 else np.log1p(-G * yi) / e
        if not np.isfinite(tau_far):
            tau_far = tau_near
        if not np.isfinite(tau_near):
            tau_near = tau_far
        lo = min(tau_far, tau_near) - 1.0
        hi = max(tau_far, tau_near) + 1.0
        step = 2.0
        while sgn * (_fneg_scalar(np.exp(lo), e, G) - yi) > 0:
            lo -= step
            step *= 2.0
        step = 2.0
        while sgn * (_fneg_scalar(np.exp(hi), e, G) - yi) < 0:
            hi += step
            step *= 2.0
        tau = 0.5 * (lo + hi)
        for _ in range(200):
            v = np.exp(tau)
            gv = sgn * (_fneg_scalar(v, e, G) - yi)
            if gv <= 0:
                lo = tau
            if gv >= 0:
                hi = tau
            slope = -sgn * v * (-(e / G) * v ** (e - 1.0) * np.expm1((e - 1.0) * np.log1p(1.0 / v)))
            new = tau - gv / slope
            if not (np.isfinite(new) and lo < new < hi):
                new = 0.5 * (lo + hi)
            done = abs(new - tau) <= 4e-16 * max(1.0, abs(tau))
            tau = new
            if done:
                break
        out[i] = np.exp(tau)
    return out
