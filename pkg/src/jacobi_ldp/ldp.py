"""Large deviations of the drift MLE for ``dY = sqrt(1-Y^2) dW + b Y dt``.

Exponential tilting by ``phi t (b_hat - x) D_t`` turns the law of the path
into that of the same SDE with drift ``b(phi, x) = -1 - sqrt(Q)``,
``Q = (b+1)^2 + 2 phi (x+1)``. The normalized cumulant generating function
of ``S_{t,x}/t`` splits into the limit

    Lambda(phi, x) = -(phi + b - b(phi, x)) / 2

plus a ``1/t`` correction computed by ``lambda_t_numeric``. Rates are
reported as nonnegative numbers: ``lim (1/t) log P = -rate``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy import integrate, optimize
from scipy.special import betaln

from .params import DEFAULT_CONTROL, ConvergenceError, DomainError, SeriesControl
from .semigroup import from_zero_coefficients

_DOMAIN_TOL = 1e-12


class AssumptionError(ArithmeticError):
    """A cumulant generating function fails a numeric regularity check."""


class CgfCase(str, Enum):
    I = "i"
    II = "ii"
    III = "iii"


class RateBranch(str, Enum):
    QUADRATIC = "quadratic"
    LINEAR_TAIL = "linear_tail"


@dataclass(frozen=True)
class CgfDomain:
    case: CgfCase
    phi0: float
    phi1: float | None
    steep: bool
    x: float
    b: float

    @property
    def interval(self) -> tuple[float, float]:
        if self.case is CgfCase.I:
            return (-math.inf, self.phi0)
        if self.case is CgfCase.II:
            return (-math.inf, self.phi1)
        return (self.phi0, self.phi1)

    def __contains__(self, phi: float) -> bool:
        lo, hi = self.interval
        return lo < phi < hi

    def as_dict(self) -> dict:
        return {"case": self.case.value, "phi0": self.phi0, "phi1": self.phi1, "steep": self.steep,
                "x": self.x, "b": self.b, "interval": list(self.interval)}


@dataclass(frozen=True)
class RateEval:
    x: float
    value: float
    branch: RateBranch

    def as_dict(self) -> dict:
        return {"x": self.x, "value": self.value, "branch": self.branch.value}


def _check_b(b: float) -> None:
    if not b <= -1.0:
        raise DomainError(f"b must be <= -1 (got {b})")


def _Q(phi: float, x: float, b: float) -> float:
    return (b + 1.0) ** 2 + 2.0 * phi * (x + 1.0)


def b_of_phi(phi: float, x: float, b: float) -> float:
    """Drift of the tilted process, ``-1 - sqrt((b+1)^2 + 2 phi (x+1))``."""
    q = _Q(phi, x, b)
    if q < 0.0:
        if q > -_DOMAIN_TOL * max(1.0, (b + 1.0) ** 2):
            q = 0.0
        else:
            raise DomainError(f"phi={phi} outside D1: (b+1)^2 + 2 phi (x+1) = {q} < 0")
    return -1.0 - math.sqrt(q)


def G(phi: float, x: float, b: float) -> float:
    """``b + b(phi, x) + phi``; the domain of ``Lambda`` is where this is negative."""
    return b + b_of_phi(phi, x, b) + phi


def Lambda(phi: float, x: float, b: float) -> float:
    """Limit cumulant generating function; defined on the closure of its domain."""
    _check_b(b)
    bp = b_of_phi(phi, x, b)
    if b + bp + phi > _DOMAIN_TOL * max(1.0, abs(phi), abs(b)):
        raise DomainError(f"phi={phi} outside the domain: G(phi) = {b + bp + phi} > 0")
    return -0.5 * (phi + b - bp)


def Lambda_prime(phi: float, x: float, b: float) -> float:
    """``d Lambda / d phi = -(1 + (x+1)/sqrt(Q)) / 2``; infinite where ``Q = 0``."""
    q = _Q(phi, x, b)
    if q <= 0.0:
        return math.copysign(math.inf, -(x + 1.0))
    return -0.5 * (1.0 + (x + 1.0) / math.sqrt(q))


def phi0(x: float, b: float) -> float:
    if x == -1.0:
        raise DomainError("x = -1 is excluded")
    return -(b + 1.0) ** 2 / (2.0 * (x + 1.0))


def case_threshold(b: float) -> float:
    """``(b^2 + 3) / (2 (b - 1))``, the boundary between cases i and ii."""
    return (b * b + 3.0) / (2.0 * (b - 1.0))


def _phi1(x: float, b: float, p0: float) -> float:
    # boundary of {G < 0}: (b + phi - 1)^2 = Q, i.e. phi^2 + 2(b-x-2) phi - 4b = 0
    h = b - x - 2.0
    disc = h * h + 4.0 * b
    in_d1 = (lambda p: p <= p0) if x < -1.0 else (lambda p: p >= p0)
    cands = []
    if disc >= 0.0:
        r = math.sqrt(disc)
        cands = [p for p in (-h - r, -h + r) if b + p - 1.0 >= -1e-12 and in_d1(p)]
    if len(cands) == 1:
        return cands[0]
    # ambiguous: bracket G on D1 directly
    lo = p0 if x > -1.0 else 0.0
    hi = 1.0 - b if x > -1.0 else p0
    while x > -1.0 and G(hi, x, b) < 0.0:
        hi *= 2.0
    try:
        return optimize.brentq(G, lo, hi, args=(x, b), xtol=1e-15, rtol=4e-16)
    except ValueError as exc:
        raise ConvergenceError(f"no root of G on D1 for x={x}, b={b}") from exc


def domain(x: float, b: float) -> CgfDomain:
    """Domain of ``Lambda(., x)`` in the three cases split by ``x``.

    At ``x`` equal to the case i/ii threshold the two descriptions coincide
    (``phi1 = phi0``); the point is reported as case i.
    """
    _check_b(b)
    if x == -1.0:
        raise DomainError("x = -1 is excluded")
    p0 = phi0(x, b)
    if x <= case_threshold(b):
        return CgfDomain(CgfCase.I, p0, None, True, x, b)
    p1 = _phi1(x, b, p0)
    return CgfDomain(CgfCase.II if x < -1.0 else CgfCase.III, p0, p1, False, x, b)


def phi_m(x: float, b: float) -> float:
    """Tilt with ``b(phi_m, x) = x``: ``(x+1)/2 - (b+1)^2 / (2(x+1))``."""
    return 0.5 * (x + 1.0) - (b + 1.0) ** 2 / (2.0 * (x + 1.0))


def x0(b: float) -> float:
    """Root below -1 of ``(b - x)^2 = 4 x (x + 1)``, i.e. of ``3x^2 + (4+2b)x - b^2``."""
    _check_b(b)
    B = 4.0 + 2.0 * b
    return (-B - math.sqrt(B * B + 12.0 * b * b)) / 6.0


def x1(nu: float) -> float:
    """Branch point of ``I_nu``: ``(-(nu+2) + 2 sqrt(nu^2 + nu + 1)) / 3``."""
    return (-(nu + 2.0) + 2.0 * math.sqrt(nu * nu + nu + 1.0)) / 3.0


def rate_J(x: float, b: float) -> RateEval:
    """Rate function of the drift MLE at true drift ``b``."""
    _check_b(b)
    if x <= x0(b):
        if x == b:
            return RateEval(x, 0.0, RateBranch.QUADRATIC)
        return RateEval(x, -(x - b) ** 2 / (4.0 * (x + 1.0)), RateBranch.QUADRATIC)
    return RateEval(x, x + 2.0 + math.sqrt((b - x) ** 2 + 4.0 * (x + 1.0)), RateBranch.LINEAR_TAIL)


def rate_I(x: float, nu: float) -> RateEval:
    """Rate function of the index estimators at true index ``nu``."""
    if x >= x1(nu):
        if x == 0.0:
            raise DomainError("I_nu is singular at x = 0 on the quadratic branch")
        return RateEval(x, (x - nu) ** 2 / (4.0 * x), RateBranch.QUADRATIC)
    return RateEval(x, 1.0 - x + math.sqrt((nu - x) ** 2 - 4.0 * x), RateBranch.LINEAR_TAIL)


def _check_convex(cgf: Callable[[float], float], lo: float, hi: float, n_probe: int = 41) -> None:
    ph = np.linspace(lo, hi, n_probe + 2)[1:-1]
    vals = np.array([cgf(p) for p in ph])
    second = vals[2:] - 2.0 * vals[1:-1] + vals[:-2]
    scale = np.max(np.abs(vals)) + 1.0
    if np.any(second < -1e-9 * scale):
        k = int(np.argmin(second))
        raise AssumptionError(f"cgf fails the convexity probe near phi={ph[k + 1]:.6g}")


def nonsteep_rate(cgf: Callable[[float], float], phi1: float, y: float,
                  dLambda0: float, dLambda1: float) -> float:
    """``sup_{phi in (0, phi1)} (y phi - cgf(phi))`` for a possibly non-steep cgf.

    Below ``dLambda0`` the rate is 0; beyond ``dLambda1`` the supremum sits
    at the endpoint and the rate is linear in ``y``: ``y phi1 - cgf(phi1)``.
    Pass ``dLambda1 = inf`` for a steep cgf.
    """
    if not phi1 > 0.0:
        raise DomainError("phi1 must be positive")
    _check_convex(cgf, 0.0, phi1)
    if y <= dLambda0:
        return 0.0
    if y >= dLambda1:
        return y * phi1 - cgf(phi1)
    res = optimize.minimize_scalar(lambda p: cgf(p) - y * p, bounds=(0.0, phi1), method="bounded",
                                   options={"xatol": 1e-12 * max(1.0, phi1)})
    return -float(res.fun)


def rate_via_cgf(x: float, b: float) -> float:
    """``J_b(x)`` recomputed through ``nonsteep_rate`` applied to ``Lambda(., x)`` at ``y = 0``.

    Covers ``b < x < -1`` (upper tail, ``phi > 0``).
    """
    _check_b(b)
    if not b < x < -1.0:
        raise DomainError("rate_via_cgf handles b < x < -1")
    dom = domain(x, b)
    end = dom.phi0 if dom.case is CgfCase.I else dom.phi1
    d1 = math.inf if dom.steep else Lambda_prime(end, x, b)
    return nonsteep_rate(lambda p: Lambda(p, x, b), end, 0.0, Lambda_prime(0.0, x, b), d1)


def lambda_t_numeric(phi: float, x: float, b: float, t: float,
                     ctrl: SeriesControl = DEFAULT_CONTROL, method: str = "quadrature") -> float:
    """Finite-``t`` cumulant generating function for paths started at 0.

    ``Lambda_t = Lambda + (1/t) log E_{b'}[(1 - Y_t^2)^(-e)]`` with
    ``b' = b(phi, x)`` and ``e = (phi + b - b')/2``; the expectation is taken
    against the from-zero density of the tilted process. ``method`` selects
    adaptive quadrature (default) or the termwise Beta-function integral.
    """
    if not t > 0:
        raise DomainError("t must be positive")
    lam = Lambda(phi, x, b)
    bp = b_of_phi(phi, x, b)
    e = 0.5 * (phi + b - bp)
    if e == 0.0:
        return lam
    alpha = -bp - 1.0
    power = alpha - e
    if not power > -1.0:
        raise DomainError(f"(1 - y^2)^(-e) is not integrable against the density (power {power} <= -1)")
    coefs = from_zero_coefficients(t, alpha, ctrl)
    # W(y) = (1 - y^2)^alpha / (2^(2 alpha + 1) B(alpha+1, alpha+1))
    log_wnorm = (2.0 * alpha + 1.0) * math.log(2.0) + betaln(alpha + 1.0, alpha + 1.0)
    if method == "quadrature":
        def f(y):
            return float(np.polynomial.polynomial.polyval(1.0 - y * y, coefs))
        val, err = integrate.quad(f, -1.0, 1.0, weight="alg", wvar=(power, power),
                                  epsabs=0.0, epsrel=1e-12, limit=200)
        if not (val > 0 and abs(err) <= 1e-8 * val):
            raise ConvergenceError(f"quadrature failed for Lambda_t (phi={phi}, t={t}, err={err})")
        expect = val * math.exp(-log_wnorm)
    elif method == "series":
        n = np.arange(coefs.size)
        # int_{-1}^{1} (1-y^2)^m dy = B(1/2, m+1)
        logb = betaln(0.5, power + n + 1.0)
        expect = float(np.sum(coefs * np.exp(logb - log_wnorm)))
    else:
        raise ValueError(f"unknown method {method!r}")
    return lam + math.log(expect) / t


def lambda_t_limit_expectation(phi: float, x: float, b: float) -> float:
    """``t -> inf`` limit of the expectation in ``lambda_t_numeric``: the stationary mean of ``(1-y^2)^(-e)``."""
    bp = b_of_phi(phi, x, b)
    e = 0.5 * (phi + b - bp)
    alpha = -bp - 1.0
    return math.exp(betaln(alpha - e + 1.0, alpha - e + 1.0) - betaln(alpha + 1.0, alpha + 1.0)
                    - 2.0 * e * math.log(2.0))


__all__ = [
    "AssumptionError", "CgfCase", "CgfDomain", "RateBranch", "RateEval", "G", "Lambda", "Lambda_prime", "b_of_phi",
    "case_threshold", "domain", "lambda_t_numeric", "lambda_t_limit_expectation", "nonsteep_rate",
    "phi0", "phi_m", "rate_I", "rate_J", "rate_via_cgf", "x0", "x1",
]
