"""Jacobi transition densities.

All kernels are densities in ``y`` with respect to Lebesgue measure on
``(-1, 1)``; the stationary weight ``W(y)`` is already folded in.

Three independent routes to ``p_t(x, y)`` for the generator
``(1 - x^2) d^2 + (p x + q) d``:

* ``density_spectral``       bilinear eigen-expansion in Jacobi polynomials
* ``density_convolution``    inverse Laplace transform of the subordinated
                             kernel, written with ``f_T1 * f_C_h`` convolutions
* ``density_ultraspherical`` double series for ``alpha == beta``

``density_from_zero`` is the kernel from ``0`` of the time-rescaled process
``Y_t = X_{t/2}`` used by the large-deviation computations.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import betaln, gammaln

from . import specfun
from .levy import conv_T1_C
from .params import DEFAULT_CONTROL, ConvergenceError, DomainError, JacobiParams, SeriesControl


@dataclass(frozen=True)
class KernelPoint:
    t: float
    x: float
    y: float

    def __post_init__(self):
        if not self.t > 0:
            raise DomainError("t must be positive")
        if not (abs(self.x) < 1 and abs(self.y) < 1):
            raise DomainError("x and y must lie in (-1, 1)")


def _log_weight_norm(params: JacobiParams) -> float:
    """``log(2^(alpha+beta+1) B(alpha+1, beta+1))``."""
    return (params.alpha + params.beta + 1.0) * math.log(2.0) + betaln(params.alpha + 1.0, params.beta + 1.0)


def stationary_density(y, params: JacobiParams):
    """Stationary (beta-type) density ``W(y)`` on ``(-1, 1)``."""
    y = np.asarray(y, dtype=float)
    if np.any(np.abs(y) >= 1.0):
        raise DomainError("y must lie in (-1, 1)")
    out = np.exp(params.alpha * np.log1p(-y) + params.beta * np.log1p(y) - _log_weight_norm(params))
    return float(out) if out.ndim == 0 else out


def integrate_against_weight(g, params: JacobiParams, epsabs: float = 1e-13, epsrel: float = 1e-12) -> float:
    """``int_{-1}^{1} g(y) W(y) dy`` with the endpoint powers handled by the quadrature weight."""
    val, _ = integrate.quad(g, -1.0, 1.0, weight="alg", wvar=(params.beta, params.alpha),
                            epsabs=epsabs, epsrel=epsrel, limit=200)
    return val * math.exp(-_log_weight_norm(params))


# ---------------------------------------------------------------------------
# spectral route
# ---------------------------------------------------------------------------

def spectral_truncation(t: float, params: JacobiParams, ctrl: SeriesControl = DEFAULT_CONTROL) -> int:
    """Smallest ``N`` whose tail bound ``sum_{n>N} e^{-lambda_n t} max|P_n|^2 / R_n`` is below tolerance."""
    prev = None
    for n in range(ctrl.max_terms + 1):
        bound = math.exp(-params.eigenvalue(n) * t) * specfun.jacobi_endpoint_bound(n, params) ** 2 \
            / specfun.jacobi_norm(n, params)
        if prev is not None and n > 1 and bound < prev:
            rho = bound / prev
            if rho < 1.0 and bound * rho / (1.0 - rho) < ctrl.abs_tol:
                return n
        prev = bound
    raise ConvergenceError(
        f"spectral sum needs more than {ctrl.max_terms} terms at t={t}; use density_convolution"
    )


def spectral_series(t: float, x: float, y, params: JacobiParams,
                    ctrl: SeriesControl = DEFAULT_CONTROL, n_terms: int | None = None):
    """``sum_n e^{-lambda_n t} P_n(x) P_n(y) / R_n`` (the kernel divided by ``W(y)``)."""
    n_max = spectral_truncation(t, params, ctrl) if n_terms is None else n_terms
    y = np.asarray(y, dtype=float)
    px = specfun.jacobi_all(n_max, params, x)
    py = specfun.jacobi_all(n_max, params, y)
    coef = np.array([
        math.exp(-params.eigenvalue(n) * t) / specfun.jacobi_norm(n, params) for n in range(n_max + 1)
    ])
    out = np.tensordot(coef * px, py, axes=(0, 0))
    return float(out) if out.ndim == 0 else out


def density_spectral(pt: KernelPoint, params: JacobiParams, ctrl: SeriesControl = DEFAULT_CONTROL,
                     return_terms: bool = False):
    """Transition density from the eigen-expansion.

    Raises ConvergenceError when ``t`` is so small that the a-priori tail
    bound needs more than ``ctrl.max_terms`` modes.
    """
    n_max = spectral_truncation(pt.t, params, ctrl)
    val = spectral_series(pt.t, pt.x, pt.y, params, ctrl, n_terms=n_max) * stationary_density(pt.y, params)
    return (val, n_max) if return_terms else val


# ---------------------------------------------------------------------------
# Poisson kernel and subordinated kernel
# ---------------------------------------------------------------------------

def f4_arguments(r: float, x: float, y: float):
    u = (1.0 - x) * (1.0 - y) * r / (1.0 + r) ** 2
    v = (1.0 + x) * (1.0 + y) * r / (1.0 + r) ** 2
    return u, v


def poisson_kernel(r: float, x: float, y: float, params: JacobiParams,
                   ctrl: SeriesControl = DEFAULT_CONTROL, method: str = "f4") -> float:
    """Bilinear generating function ``sum_n P_n(x) P_n(y) r^n / R_n``.

    ``method`` selects ``"f4"`` (Appell closed form), ``"direct"`` (the sum
    itself, truncated by a tail bound) or ``"bailey"`` (reduction to a
    single 2F1, ultraspherical parameters only).
    """
    if not 0.0 < r < 1.0:
        raise DomainError("r must lie in (0, 1)")
    if not (abs(x) < 1 and abs(y) < 1):
        raise DomainError("x and y must lie in (-1, 1)")
    a = params.a
    if method == "direct":
        return _poisson_direct(r, x, y, params, ctrl)
    u, v = f4_arguments(r, x, y)
    pref = (1.0 - r) / (1.0 + r) ** a
    if method == "f4":
        return pref * specfun.appell_F4(a / 2.0, (a + 1.0) / 2.0, params.alpha + 1.0, params.beta + 1.0, u, v, ctrl)
    if method == "bailey":
        if not params.ultraspherical:
            raise DomainError("Bailey reduction needs alpha == beta")
        al = params.alpha
        w = 1.0 - u - v
        return pref * w ** (-(al + 1.5)) * specfun.hyp2F1(
            (2.0 * al + 3.0) / 4.0, (2.0 * al + 5.0) / 4.0, al + 1.0, 4.0 * u * v / w ** 2, ctrl
        )
    raise ValueError(f"unknown method {method!r}")


def _poisson_direct(r, x, y, params, ctrl, n_terms: int | None = None) -> float:
    if n_terms is None:
        prev = None
        for n in range(ctrl.max_terms * 10):
            bound = r ** n * specfun.jacobi_endpoint_bound(n, params) ** 2 / specfun.jacobi_norm(n, params)
            if prev is not None and n > 1 and bound < prev:
                rho = bound / prev
                if bound * rho / (1.0 - rho) < ctrl.abs_tol:
                    n_terms = n
                    break
            prev = bound
        else:
            raise ConvergenceError("direct Poisson-kernel sum not converged")
    px = specfun.jacobi_all(n_terms, params, x)
    py = specfun.jacobi_all(n_terms, params, y)
    coef = np.array([r ** n / specfun.jacobi_norm(n, params) for n in range(n_terms + 1)])
    return float(np.sum(coef * px * py))


def _bilinear_coefficients(params: JacobiParams, x: float, y: float):
    """Yields ``(a)_{2n} / ((alpha+1)_n (beta+1)_n 8^n)`` in log form and
    ``(x+y)^n P_n((1+xy)/(x+y))`` lazily, extending the recurrence on demand."""
    al, be, a = params.alpha, params.beta, params.a
    u, w = 1.0 + x * y, x + y
    cache = {"h": specfun.jacobi_homogeneous(16, params, u, w)}

    def log_coef(n):
        return (gammaln(a + 2.0 * n) - gammaln(a) - specfun.log_pochhammer(al + 1.0, n)
                - specfun.log_pochhammer(be + 1.0, n) - n * math.log(8.0))

    def hom(n):
        if n >= cache["h"].size:
            cache["h"] = specfun.jacobi_homogeneous(2 * n, params, u, w)
        return cache["h"][n]

    return log_coef, hom


def subordinated_kernel(t: float, x: float, y: float, params: JacobiParams,
                        ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Kernel of ``X`` run on the inverse Gaussian clock with ``delta = 1/sqrt 2``,
    ``mu = sqrt 2 gamma``, which turns the eigenvalues into ``n``.

    Closed form (equal to ``W(y)`` times the Poisson kernel at ``r = e^{-t}``)::

        W(y) e^{gamma t} tanh(t/2) / 2^(a-1)
          * sum_n (a)_{2n} / ((alpha+1)_n (beta+1)_n) H_n / 8^n sech(t/2)^(2n+a-1)

    with ``H_n = (x+y)^n P_n((1+xy)/(x+y))``.
    """
    if not params.alpha + params.beta > -1.0:
        raise DomainError("subordination needs alpha + beta > -1")
    if not t > 0:
        raise DomainError("t must be positive")
    if not (abs(x) < 1 and abs(y) < 1):
        raise DomainError("x and y must lie in (-1, 1)")
    a = params.a
    log_coef, hom = _bilinear_coefficients(params, x, y)
    log_sech = -math.log(math.cosh(t / 2.0))

    def term(n):
        val = math.exp(log_coef(n) + 2.0 * n * log_sech) * hom(n)
        return val, abs(val)

    series, _ = _series_until_small(term, ctrl, "subordinated-kernel", min_terms=4)
    pref = math.exp(params.gamma * t + (a - 1.0) * log_sech - (a - 1.0) * math.log(2.0)) * math.tanh(t / 2.0)
    return stationary_density(y, params) * pref * series


# ---------------------------------------------------------------------------
# convolution route
# ---------------------------------------------------------------------------

def _series_until_small(term_fn, ctrl: SeriesControl, what: str, min_terms: int = 2):
    """Sum ``term_fn(n) -> (value, magnitude_bound)`` until two successive bounds are negligible."""
    total = 0.0
    small = 0
    peak = 0.0
    for n in range(ctrl.max_terms):
        val, bound = term_fn(n)
        total += val
        peak = max(peak, bound)
        if n >= min_terms and bound < ctrl.abs_tol * max(1.0, peak) * 1e-2:
            small += 1
            if small >= 2:
                return total, n
        else:
            small = 0
    raise ConvergenceError(f"{what} series not converged within {ctrl.max_terms} terms")


def density_convolution(pt: KernelPoint, params: JacobiParams, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Transition density as a series of ``f_T1 * f_C_h`` convolutions at ``2/t``::

        sqrt(pi) W(y) / 2^(alpha+beta) e^{gamma^2 t} / sqrt(t)
          * sum_n (a)_{2n} / ((alpha+1)_n (beta+1)_n) H_n / 8^n (f_T1 * f_C_{2n+a-1})(2/t)
    """
    if not params.alpha + params.beta > -1.0:
        raise DomainError("convolution route needs alpha + beta > -1")
    t, x, y = pt.t, pt.x, pt.y
    al, be, a, g = params.alpha, params.beta, params.a, params.gamma
    s = 2.0 / t
    if s < 1e-6:
        warnings.warn(f"t={t} is so large that the convolution factors underflow; use density_spectral",
                      RuntimeWarning, stacklevel=2)
    log_coef, hom = _bilinear_coefficients(params, x, y)

    def term(n):
        conv = conv_T1_C(2.0 * n + a - 1.0, s, ctrl, log_scale=float(g * g * t + log_coef(n)))
        val = conv * hom(n)
        return val, abs(val)

    series, _ = _series_until_small(term, ctrl, "convolution-route", min_terms=4)
    pref = math.sqrt(math.pi) / (2.0 ** (al + be) * math.sqrt(t))
    return pref * stationary_density(y, params) * series


def ultraspherical_constant(alpha: float) -> float:
    """``Gamma(alpha+1) / (2^(alpha+1/2) Gamma(alpha+3/2))``."""
    return math.exp(gammaln(alpha + 1.0) - (alpha + 0.5) * math.log(2.0) - gammaln(alpha + 1.5))


def density_ultraspherical(pt: KernelPoint, alpha: float, ctrl: SeriesControl = DEFAULT_CONTROL) -> float:
    """Transition density for ``alpha == beta > -1/2`` as a double series.

    Terms are grouped by ``m = 2n + k`` so that each group shares one
    convolution ``f_T1 * f_C_nu`` with ``nu = m + alpha + 1/2``.
    """
    if not alpha > -0.5:
        raise DomainError("ultraspherical route needs alpha > -1/2")
    params = JacobiParams(alpha, alpha)
    t, x, y = pt.t, pt.x, pt.y
    g = params.gamma
    s = 1.0 / (2.0 * t)
    xy = x * y
    quad = (1.0 - x * x) * (1.0 - y * y) / 4.0

    def term(m):
        nu = m + alpha + 0.5
        conv = conv_T1_C(nu, s, ctrl, log_scale=float(g * g * t + gammaln(nu + 1.0)))
        if conv == 0.0:
            return 0.0, 0.0
        val = 0.0
        mag = 0.0
        for n in range(m // 2 + 1):
            k = m - 2 * n
            lc = n * math.log(quad) - gammaln(n + 1.0) - gammaln(alpha + n + 1.0) - gammaln(k + 1.0)
            if k:
                lc += k * math.log(abs(xy)) if xy != 0.0 else -math.inf
            c = math.exp(lc) if lc > -math.inf else 0.0
            sign = -1.0 if (xy < 0 and k % 2) else 1.0
            val += sign * c
            mag += c
        return conv * val, conv * mag

    series, _ = _series_until_small(term, ctrl, "ultraspherical", min_terms=4)
    pref = math.sqrt(math.pi) * ultraspherical_constant(alpha) / math.sqrt(t)
    return pref * stationary_density(y, params) * series


def from_zero_coefficients(t: float, alpha: float, ctrl: SeriesControl = DEFAULT_CONTROL):
    """Coefficients ``c_n`` with ``p~_t(0, y) = W(y) sum_n c_n (1 - y^2)^n``.

    Returned array already includes every ``y``-independent factor.
    """
    if not alpha > -0.5:
        raise DomainError("alpha must exceed -1/2")
    if not t > 0:
        raise DomainError("t must be positive")
    g = alpha + 0.5
    s = 1.0 / t
    pref = math.log(math.sqrt(2.0 * math.pi) * ultraspherical_constant(alpha)) - 0.5 * math.log(t)
    coefs = []

    def term(n):
        lc = gammaln(2.0 * n + alpha + 1.5) - n * math.log(4.0) - gammaln(n + 1.0) - gammaln(n + alpha + 1.0)
        c = conv_T1_C(2.0 * n + g, s, ctrl, log_scale=float(g * g * t / 2.0 + lc + pref))
        coefs.append(c)
        return c, c

    _series_until_small(term, ctrl, "from-zero")
    return np.array(coefs)


def density_from_zero(t: float, y, alpha: float, ctrl: SeriesControl = DEFAULT_CONTROL):
    """Density at time ``t`` of ``Y`` (the process with generator ``L/2``,
    ``alpha = beta``) started from ``0``.

    Normalized with the full stationary weight ``W(y)``, so it integrates to 1.
    """
    y = np.asarray(y, dtype=float)
    coefs = from_zero_coefficients(t, alpha, ctrl)
    params = JacobiParams(alpha, alpha)
    one_m = 1.0 - y * y
    series = np.polynomial.polynomial.polyval(one_m, coefs)
    out = stationary_density(y, params) * series
    return float(out) if out.ndim == 0 else out
