"""Subordinator densities: inverse Gaussian, stable-1/2 hitting times and
the ``C_h`` / ``T_1`` laws whose Laplace transforms are hyperbolic powers.

Transforms are taken in the variable ``lam = t^2 / 8``::

    E exp(-lam C_h) = cosh(t/2)^(-h)
    E exp(-lam T_1) = tanh(t/2) / (t/2)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .params import DEFAULT_CONTROL, ConvergenceError, DomainError, SeriesControl

_LOG_2PI = math.log(2.0 * math.pi)
# below this argument the theta-dual series is used for f_T1
_T1_SWITCH = 2.0 / math.pi
# conv_T1_C returns 0 below this argument (both factors underflow)
CONV_UNDERFLOW = 1e-6


@dataclass(frozen=True)
class IGParams:
    """Inverse Gaussian subordinator: first passage of ``B_s + mu s`` at ``delta t``."""

    mu: float
    delta: float
    t: float

    def __post_init__(self):
        if not (self.mu > 0 and self.delta > 0 and self.t > 0):
            raise DomainError("mu, delta and t must all be positive")


def ig_density(s, ig: IGParams):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    sp = s[pos]
    lvl = ig.delta * ig.t
    out[pos] = (lvl / math.sqrt(2.0 * math.pi)) * np.exp(
        lvl * ig.mu - 1.5 * np.log(sp) - 0.5 * (lvl * lvl / sp + ig.mu * ig.mu * sp)
    )
    return float(out) if out.ndim == 0 else out


def ig_laplace(u, ig: IGParams):
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise DomainError("Laplace argument must be nonnegative")
    out = np.exp(-ig.t * ig.delta * (np.sqrt(2.0 * u + ig.mu ** 2) - ig.mu))
    return float(out) if out.ndim == 0 else out


def tau_density(c: float, s):
    """Density of the first hitting time of level ``c`` by standard Brownian motion."""
    if not c > 0:
        raise DomainError("level c must be positive")
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    sp = s[pos]
    out[pos] = c * np.exp(-0.5 * (_LOG_2PI + 3.0 * np.log(sp)) - c * c / (2.0 * sp))
    return float(out) if out.ndim == 0 else out


def _C_log_terms(h: float, s: float, p: np.ndarray, log_scale: float) -> np.ndarray:
    c = 2.0 * p + h
    return (
        h * math.log(2.0) - gammaln(h) + gammaln(p + h) - gammaln(p + 1.0)
        + np.log(c) - 0.5 * (_LOG_2PI + 3.0 * math.log(s)) - c * c / (2.0 * s)
        + log_scale
    )


def density_C(h: float, s: float, ctrl: SeriesControl = DEFAULT_CONTROL,
              log_scale: float = 0.0) -> float:
    """Density of ``C_h`` at ``s`` as an alternating mixture of hitting-time laws.

    ``log_scale`` multiplies the result by ``exp(log_scale)`` inside the sum,
    which keeps tiny densities representable when a caller rescales them.
    When the alternating sum cancels badly (large ``s`` compared to ``h``)
    it is recomputed in extended precision.
    """
    if not h > 0:
        raise DomainError("h must be positive")
    if s <= 0:
        return 0.0
    # right tail ~ s^(h-1) exp(-pi^2 s / 8); skip once far below underflow
    log_tail = ((h - 1.0) * math.log(s) + h * (math.log(math.pi ** 2 / 8.0) + 1.0)
                - gammaln(h) - math.pi ** 2 * s / 8.0 + log_scale)
    if log_tail < -760.0:
        return 0.0
    block = 64
    logs = []
    start = 0
    # stop once terms are past their peak and negligible
    while True:
        p = np.arange(start, start + block, dtype=float)
        lt = _C_log_terms(h, s, p, log_scale)
        logs.append(lt)
        start += block
        peak = max(float(np.max(x)) for x in logs)
        floor = min(math.log(ctrl.abs_tol) - 10.0, peak - 40.0, log_tail - 40.0)
        if lt[-1] < lt[0] and lt[-1] < floor:
            break
        if start > ctrl.max_terms * 8:
            raise ConvergenceError(f"f_C series not converged (h={h}, s={s})")
    lt = np.concatenate(logs)
    vals = np.exp(lt)
    # pairwise grouping of the alternating terms
    pairs = vals[0::2][: vals[1::2].size] - vals[1::2]
    total = float(pairs.sum()) + (float(vals[-1]) if vals.size % 2 else 0.0)
    total_abs = float(vals.sum())
    if total_abs == 0.0:
        return 0.0
    if total <= 0.0 or total_abs > 1e3 * abs(total):
        # digits lost: largest term against the smaller of the float result
        # and the right-tail size estimate
        lost = peak - min(log_tail, math.log(abs(total)) if total > 0 else log_tail)
        return _density_C_mp(h, s, lt.size, log_scale, lost / math.log(10.0))
    return total


def _density_C_mp(h: float, s: float, n_terms: int, log_scale: float, lost: float) -> float:
    digits = int(min(600, 25 + max(0.0, lost)))
    with mpmath.workdps(digits):
        h_mp, s_mp = mpmath.mpf(h), mpmath.mpf(s)
        term = mpmath.exp(h_mp * mpmath.log(2) + mpmath.log(h_mp)
                          - (mpmath.log(2 * mpmath.pi) + 3 * mpmath.log(s_mp)) / 2
                          - h_mp * h_mp / (2 * s_mp) + log_scale)
        # ratio of consecutive terms is rational in p times exp(-(4p+2h+2)/s)
        e = mpmath.exp(-(2 * h_mp + 2) / s_mp)
        q = mpmath.exp(-4 / s_mp)
        acc = term
        for p in range(n_terms - 1):
            c = 2 * p + h_mp
            term = -term * (p + h_mp) / (p + 1) * (c + 2) / c * e
            e *= q
            acc += term
        return float(acc)


def density_T1(s: float, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Density of ``T_1``: ``sum_k exp(-(pi^2/2)(k+1/2)^2 s)``.

    For small ``s`` the theta-dual form
    ``(2 pi s)^(-1/2) sum_{m in Z} (-1)^m exp(-2 m^2 / s)`` is summed instead.
    """
    if s <= 0:
        return 0.0
    if s >= _T1_SWITCH:
        return _T1_direct(s)
    return _T1_dual_scaled(s) / math.sqrt(s)


def _T1_direct(s: float) -> float:
    total = 0.0
    k = 0
    while True:
        term = math.exp(-0.5 * math.pi ** 2 * (k + 0.5) ** 2 * s)
        total += term
        if term < 1e-18 * total:
            return total
        k += 1


def _T1_dual_scaled(s: float) -> float:
    """``sqrt(s) f_T1(s)`` from the dual series; smooth as ``s -> 0``."""
    total = 1.0
    m = 1
    while True:
        term = 2.0 * math.exp(-2.0 * m * m / s)
        total += -term if m % 2 else term
        if term < 1e-18:
            break
        m += 1
    return total / math.sqrt(2.0 * math.pi)


def _T1_sqrt_scaled(v: float) -> float:
    if v <= 0:
        return 1.0 / math.sqrt(2.0 * math.pi)
    if v >= _T1_SWITCH:
        return _T1_direct(v) * math.sqrt(v)
    return _T1_dual_scaled(v)


def conv_T1_C(h: float, s: float, ctrl: SeriesControl = DEFAULT_CONTROL,
              log_scale: float = 0.0) -> float:
    """``(f_T1 * f_C_h)(s)`` by adaptive quadrature, times ``exp(log_scale)``.

    The integral is split at ``s/2``. On the right half ``f_T1(s-u)`` has an
    integrable ``(s-u)^(-1/2)`` singularity which is handed to the
    quadrature as an algebraic weight. Below ``CONV_UNDERFLOW`` both factors
    are far below double precision and 0 is returned.
    """
    if not h > 0:
        raise DomainError("h must be positive")
    if s < CONV_UNDERFLOW:
        return 0.0
    return _conv_cached(float(h), float(s), ctrl, float(log_scale))


@lru_cache(maxsize=8192)
def _conv_cached(h: float, s: float, ctrl: SeriesControl, log_scale: float) -> float:
    def left(u):
        return density_C(h, u, ctrl, log_scale) * density_T1(s - u, ctrl)

    def right(u):
        return density_C(h, u, ctrl, log_scale) * _T1_sqrt_scaled(s - u)

    opts = dict(epsabs=0.0, epsrel=1e-11, limit=200)
    i1, e1 = integrate.quad(left, 0.0, 0.5 * s, **opts)
    i2, e2 = integrate.quad(right, 0.5 * s, s, weight="alg", wvar=(0.0, -0.5), **opts)
    total = i1 + i2
    if abs(e1) + abs(e2) > 1e-7 * abs(total) + 1e-300:
        raise ConvergenceError(f"convolution quadrature inaccurate (h={h}, s={s})")
    return total
