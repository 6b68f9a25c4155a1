"""Special functions: Pochhammer symbols, Jacobi polynomials, hypergeometric
series, Appell F4 and the Jacobi theta function.

Series are summed with an explicit stopping rule: once the term ratio is
below one, the remaining tail is bounded by a geometric series and
summation stops when that bound drops under ``ctrl.abs_tol``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from .params import DEFAULT_CONTROL, ConvergenceError, DomainError, JacobiParams, SeriesControl


def pochhammer(a: float, n: int) -> float:
    """Rising factorial ``a (a+1) ... (a+n-1)``."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    if n > 60 and a > 0:
        return math.exp(gammaln(a + n) - gammaln(a))
    out = 1.0
    for k in range(n):
        out *= a + k
    return out


def log_pochhammer(a: float, n) -> np.ndarray:
    """``log (a)_n`` for ``a > 0``; vectorized over ``n``."""
    return gammaln(a + np.asarray(n, dtype=float)) - gammaln(a)


def _is_nonpositive_int(c: float) -> bool:
    return c <= 0 and float(c).is_integer()


# ---------------------------------------------------------------------------
# Jacobi polynomials
# ---------------------------------------------------------------------------

def jacobi_all(nmax: int, params: JacobiParams, x) -> np.ndarray:
    """Values ``P_0(x), ..., P_nmax(x)`` stacked along the first axis.

    Standard three-term recurrence in ``n``.
    """
    al, be = params.alpha, params.beta
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 1.0
    if nmax == 0:
        return out
    out[1] = (al + 1.0) + (al + be + 2.0) * (x - 1.0) / 2.0
    for n in range(2, nmax + 1):
        s = 2.0 * n + al + be
        a1 = 2.0 * n * (n + al + be) * (s - 2.0)
        a2 = (s - 1.0) * (al * al - be * be)
        a3 = (s - 2.0) * (s - 1.0) * s
        a4 = 2.0 * (n + al - 1.0) * (n + be - 1.0) * s
        out[n] = ((a2 + a3 * x) * out[n - 1] - a4 * out[n - 2]) / a1
    return out


def jacobi_homogeneous(nmax: int, params: JacobiParams, u: float, w: float) -> np.ndarray:
    """``w^n P_n(u / w)`` for ``n = 0..nmax``, finite also at ``w = 0``.

    Same recurrence as ``jacobi_all`` with every term multiplied through
    by the matching power of ``w``.
    """
    al, be = params.alpha, params.beta
    out = np.empty(nmax + 1)
    out[0] = 1.0
    if nmax == 0:
        return out
    out[1] = (al + 1.0) * w + (al + be + 2.0) * (u - w) / 2.0
    for n in range(2, nmax + 1):
        s = 2.0 * n + al + be
        a1 = 2.0 * n * (n + al + be) * (s - 2.0)
        a2 = (s - 1.0) * (al * al - be * be)
        a3 = (s - 2.0) * (s - 1.0) * s
        a4 = 2.0 * (n + al - 1.0) * (n + be - 1.0) * s
        out[n] = ((a2 * w + a3 * u) * out[n - 1] - a4 * w * w * out[n - 2]) / a1
    return out


def jacobi_poly(n: int, params: JacobiParams, x):
    """Jacobi polynomial ``P_n^{alpha, beta}(x)``."""
    if n < 0:
        raise DomainError("degree must be nonnegative")
    if np.any(np.abs(np.asarray(x)) > 1.0):
        raise DomainError("x must lie in [-1, 1]")
    val = jacobi_all(n, params, x)[n]
    return float(val) if np.ndim(val) == 0 else val


def jacobi_poly_hypergeometric(n: int, params: JacobiParams, x: float, exact: bool = False) -> float:
    """``P_n`` through its terminating 2F1 definition (reference evaluation).

    With ``exact`` the sum runs in rational arithmetic on the binary values
    of the inputs, so the only rounding is the final conversion; the float
    sum cancels badly near ``x = -1`` for large ``n``.
    """
    num = Fraction if exact else float
    al, be, x = num(params.alpha), num(params.beta), num(x)
    z = (1 - x) / 2
    term, total = num(1), num(1)
    for k in range(n):
        term *= (-n + k) * (n + al + be + 1 + k) / ((al + 1 + k) * (k + 1)) * z
        total += term
    lead = num(1)
    for k in range(n):
        lead *= (al + 1 + k) / (k + 1)
    return float(lead * total)


def jacobi_endpoint_bound(n: int, params: JacobiParams) -> float:
    """``max |P_n|`` on ``[-1, 1]`` when ``max(alpha, beta) >= -1/2``.

    In the remaining corner the bound is taken at the interior extremum
    estimate ``|P_n| <= (max(alpha,beta)+1)_n / n! * n^(1/2)``, which is
    loose but only feeds truncation decisions.
    """
    q = max(params.alpha, params.beta)
    val = math.exp(gammaln(q + 1.0 + n) - gammaln(q + 1.0) - gammaln(n + 1.0)) if n else 1.0
    if q < -0.5:
        val *= math.sqrt(n + 1.0)
    return val


def jacobi_norm(n: int, params: JacobiParams) -> float:
    """``R_n``, the squared norm of ``P_n`` under the probability measure ``W(y) dy``."""
    if n == 0:
        return 1.0
    al, be = params.alpha, params.beta
    s = 2.0 * n + al + be + 1.0
    log_r = (
        gammaln(al + be + 2.0)
        - math.log(s)
        + gammaln(al + 1.0 + n) - gammaln(al + 1.0)
        + gammaln(be + 1.0 + n) - gammaln(be + 1.0)
        - gammaln(al + be + n + 1.0)
        - gammaln(n + 1.0)
    )
    return math.exp(log_r)


def jacobi_log_norms(nmax: int, params: JacobiParams) -> np.ndarray:
    return np.log([jacobi_norm(n, params) for n in range(nmax + 1)])


# ---------------------------------------------------------------------------
# Hypergeometric series
# ---------------------------------------------------------------------------

def hyp2F1(a: float, b: float, c: float, z: float, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Gauss series ``2F1(a, b; c; z)`` for ``|z| < 1`` or a terminating series."""
    terminating = (_is_nonpositive_int(a) or _is_nonpositive_int(b))
    n_stop = None
    if terminating:
        n_stop = int(-max(x for x in (a, b) if _is_nonpositive_int(x)))
    if _is_nonpositive_int(c) and (n_stop is None or n_stop >= -c + 1):
        raise DomainError(f"2F1 pole: c={c} is a nonpositive integer")
    if not terminating and abs(z) >= 1.0:
        raise DomainError(f"2F1 series diverges for |z|={abs(z)} >= 1")
    term, total = 1.0, 1.0
    k = 0
    limit = n_stop if terminating else ctrl.max_terms * 50
    while k < limit:
        ratio = (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        term *= ratio
        total += term
        k += 1
        if terminating:
            continue
        rho = abs(ratio)
        # term ratios tend to |z| from above once k > |a|,|b|,|c|
        rho_bound = abs(z) * max(1.0, abs((a + k) * (b + k) / ((c + k) * (k + 1.0))))
        if rho_bound < 1.0 and k > abs(a) + abs(b) + abs(c):
            if abs(term) * rho_bound / (1.0 - rho_bound) < ctrl.abs_tol * max(1.0, abs(total)):
                return total
        elif rho == 0.0:
            return total
    if terminating:
        return total
    raise ConvergenceError(f"2F1 not converged after {limit} terms (z={z})")


def hyp0F1(c: float, z: float, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Confluent limit series ``0F1(; c; z)``."""
    if _is_nonpositive_int(c):
        raise DomainError(f"0F1 pole: c={c} is a nonpositive integer")
    term, total = 1.0, 1.0
    for k in range(ctrl.max_terms * 10):
        ratio = z / ((c + k) * (k + 1.0))
        term *= ratio
        total += term
        if c + k + 1 > 0:
            rho = abs(z) / ((c + k + 1.0) * (k + 2.0))
            if rho < 1.0 and abs(term) * rho / (1.0 - rho) < ctrl.abs_tol * max(1.0, abs(total)):
                return total
    raise ConvergenceError(f"0F1 not converged (c={c}, z={z})")


@dataclass(frozen=True)
class F4ConvergenceRegion:
    u: float
    v: float

    @property
    def converges(self) -> bool:
        return math.sqrt(abs(self.u)) + math.sqrt(abs(self.v)) < 1.0


def appell_F4(a: float, b: float, c: float, d: float, u: float, v: float,
              ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Appell ``F4(a, b; c, d; u, v)`` summed along anti-diagonals ``m + n = k``.

    The summand factorizes as ``(a)_k (b)_k * U_m * V_n`` with
    ``U_m = u^m / ((c)_m m!)``; each factor is tracked as sign and log
    magnitude so large ``k`` neither overflows nor underflows early.
    """
    if not F4ConvergenceRegion(u, v).converges:
        raise DomainError(f"F4 outside convergence region: sqrt|u|+sqrt|v| >= 1 (u={u}, v={v})")
    if _is_nonpositive_int(c) or _is_nonpositive_int(d):
        raise DomainError("F4 pole: lower parameter is a nonpositive integer")
    K = ctrl.max_terms
    lu = _log_series_factors(c, u, K)
    lv = _log_series_factors(d, v, K)
    la = _log_rising(a, K)
    lb = _log_rising(b, K)

    total = 0.0
    prev_abs = None
    for k in range(K + 1):
        m = np.arange(k + 1)
        s_ab = la[0][k] * lb[0][k]
        if s_ab == 0.0:
            diag = 0.0
            diag_abs = 0.0
        else:
            lg = la[1][k] + lb[1][k] + lu[1][m] + lv[1][k - m]
            sg = s_ab * lu[0][m] * lv[0][k - m]
            vals = sg * np.exp(lg)
            diag = float(vals.sum())
            diag_abs = float(np.abs(vals).sum())
        total += diag
        if prev_abs is not None and prev_abs > 0.0 and k > 2:
            rho = diag_abs / prev_abs
            if rho < 1.0 and diag_abs * rho / (1.0 - rho) < ctrl.abs_tol * max(1.0, abs(total)):
                return total
        if prev_abs == 0.0 and diag_abs == 0.0 and k > 2:
            return total
        prev_abs = diag_abs
    raise ConvergenceError(f"F4 not converged within {K} anti-diagonals (u={u}, v={v})")


def _log_rising(a: float, K: int):
    """Sign and log magnitude of ``(a)_k`` for ``k = 0..K``."""
    k = np.arange(K)
    f = a + k
    sign = np.concatenate([[1.0], np.cumprod(np.sign(f))])
    with np.errstate(divide="ignore"):
        logs = np.concatenate([[0.0], np.cumsum(np.log(np.abs(f)))])
    return sign, logs


def _log_series_factors(c: float, u: float, K: int):
    """Sign and log magnitude of ``u^m / ((c)_m m!)`` for ``m = 0..K``."""
    m = np.arange(K)
    f = u / ((c + m) * (m + 1.0))
    sign = np.concatenate([[1.0], np.cumprod(np.sign(f))])
    with np.errstate(divide="ignore"):
        logs = np.concatenate([[0.0], np.cumsum(np.log(np.abs(f)))])
    return sign, logs


# ---------------------------------------------------------------------------
# Theta function
# ---------------------------------------------------------------------------

def _theta_direct(x: float) -> float:
    total = 1.0
    l = 1
    while True:
        term = 2.0 * math.exp(-math.pi * l * l * x)
        total += term
        if term < 1e-17 * total:
            return total
        l += 1


def theta(x: float) -> float:
    """``sum_{l in Z} exp(-pi l^2 x)`` for ``x > 0``.

    For ``x < 1`` the modular relation ``theta(x) = theta(1/x) / sqrt(x)``
    moves the evaluation to where the series converges fast.
    """
    if not x > 0:
        raise DomainError("theta requires x > 0")
    if x >= 1.0:
        return _theta_direct(x)
    return _theta_direct(1.0 / x) / math.sqrt(x)
