"""Identity checks shared by the ``verify`` command and the acceptance suite.

Each check computes both sides of an identity independently and reports
the worst discrepancy against a tolerance.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

from . import ldp, levy, semigroup, specfun
from .params import JacobiParams

_HALF_LINE_BREAKS = (0.0, 0.05, 0.3, 1.0, 3.0, 10.0, 30.0, 120.0)


@dataclass
class CheckResult:
    name: str
    error: float
    tol: float
    seconds: float = 0.0
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.error < self.tol)

    def as_dict(self) -> dict:
        return {"name": self.name, "error": self.error, "tol": self.tol, "passed": self.passed,
                "seconds": self.seconds, "detail": self.detail}


def laplace_numeric(f: Callable[[float], float], lam: float) -> float:
    """``int_0^inf e^{-lam s} f(s) ds`` over ``[0, 120]`` in pieces.

    All densities here decay at least like ``exp(-pi^2 s / 8)``, so the
    remainder beyond 120 is below ``1e-50``.
    """
    total = 0.0
    for lo, hi in zip(_HALF_LINE_BREAKS, _HALF_LINE_BREAKS[1:]):
        val, _ = integrate.quad(lambda s: math.exp(-lam * s) * f(s), lo, hi, epsabs=1e-15, epsrel=1e-12, limit=200)
        total += val
    return total


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------

RECURRENCE_PARAMS = ((0.5, 0.8), (0.0, 0.0), (-0.5, 1.5))


def check_recurrence(tol: float = 1e-10) -> CheckResult:
    """Three-term recurrence against the exact terminating 2F1, ``n <= 20``, 9 points, 3 pairs."""
    xs = np.linspace(-1.0, 1.0, 9)
    worst = 0.0
    for al, be in RECURRENCE_PARAMS:
        params = JacobiParams(al, be)
        vals = specfun.jacobi_all(20, params, xs)
        for n in range(21):
            for i, x in enumerate(xs):
                ref = specfun.jacobi_poly_hypergeometric(n, params, x, exact=True)
                err = abs(vals[n, i] - ref)
                worst = max(worst, err / abs(ref) if ref != 0.0 else err)
    return CheckResult("recurrence", worst, tol, detail="max relative error")


def check_orthogonality(tol: float = 1e-8, n_max: int = 20) -> CheckResult:
    """``int P_m P_n W = delta_mn R_n`` for ``m, n <= n_max`` by Gauss-Jacobi quadrature
    (exact for these degrees), as errors relative to ``sqrt(R_m R_n)``."""
    worst = 0.0
    for al, be in RECURRENCE_PARAMS:
        params = JacobiParams(al, be)
        nodes, weights = special.roots_jacobi(n_max + 2, al, be)
        weights = weights / weights.sum()
        v = specfun.jacobi_all(n_max, params, nodes)
        gram = (v * weights) @ v.T
        norms = np.array([specfun.jacobi_norm(n, params) for n in range(n_max + 1)])
        worst = max(worst, float(np.max(np.abs(gram - np.diag(norms)) / np.sqrt(np.outer(norms, norms)))))
    return CheckResult("orthogonality", worst, tol)


def check_eigen(tol: float = 1e-5, h: float = 1e-4) -> CheckResult:
    """Finite-difference generator residual ``|L P_n + lambda_n P_n| / (1 + |lambda_n P_n|)``, ``n <= 8``."""
    xs = np.linspace(-0.9, 0.9, 13)
    worst = 0.0
    for al, be in RECURRENCE_PARAMS:
        params = JacobiParams(al, be)
        for n in range(9):
            f = lambda z: specfun.jacobi_all(n, params, z)[n]  # noqa: E731
            f0, fp, fm = f(xs), f(xs + h), f(xs - h)
            d1 = (fp - fm) / (2 * h)
            d2 = (fp - 2 * f0 + fm) / (h * h)
            lp = (1 - xs * xs) * d2 + (params.p * xs + params.q) * d1
            lam = params.eigenvalue(n) * f0
            worst = max(worst, float(np.max(np.abs(lp + lam) / (1 + np.abs(lam)))))
    return CheckResult("eigen", worst, tol)


def check_theta(tol: float = 1e-12) -> CheckResult:
    """``theta(x) = theta(1/x)/sqrt(x)``, both sides summed directly."""
    worst = 0.0
    for x in (0.1, 0.37, 1.0, 2.9):
        lhs = 1.0 + 2.0 * sum(math.exp(-math.pi * l * l * x) for l in range(1, 60))
        rhs = (1.0 + 2.0 * sum(math.exp(-math.pi * l * l / x) for l in range(1, 60))) / math.sqrt(x)
        worst = max(worst, abs(lhs - rhs), abs(specfun.theta(x) - lhs))
    return CheckResult("theta", worst, tol)


def check_product_formula(tol: float = 1e-12) -> CheckResult:
    """``0F1(c; w(r-1)/2) 0F1(d; w(r+1)/2) = sum_n P_n(r) w^n / ((c)_n (d)_n)`` at ``(1.5, 1.2, 0.3, 0.4)``."""
    c, d, w, r = 1.5, 1.2, 0.3, 0.4
    params = JacobiParams(c - 1.0, d - 1.0)
    lhs = specfun.hyp0F1(c, w * (r - 1.0) / 2.0) * specfun.hyp0F1(d, w * (r + 1.0) / 2.0)
    pn = specfun.jacobi_all(40, params, r)
    rhs = sum(pn[n] * w ** n / (specfun.pochhammer(c, n) * specfun.pochhammer(d, n)) for n in range(41))
    return CheckResult("product", abs(lhs - rhs), tol)


# ---------------------------------------------------------------------------
# Poisson kernel
# ---------------------------------------------------------------------------

POISSON_POINT = (0.5, 0.2, -0.4, 0.3, 0.3)


def check_poisson(tol: float = 1e-8) -> CheckResult:
    """60-term bilinear sum against the Appell F4 closed form."""
    r, x, y, al, be = POISSON_POINT
    params = JacobiParams(al, be)
    direct = semigroup._poisson_direct(r, x, y, params, specfun.DEFAULT_CONTROL, n_terms=59)
    closed = semigroup.poisson_kernel(r, x, y, params, method="f4")
    return CheckResult("poisson", abs(direct - closed), tol, detail=f"F4 value {closed:.15g}")


def check_bailey(tol: float = 1e-8) -> CheckResult:
    """Bailey 2F1 reduction against F4 for the kernel, plus the bare identity at ``(1.5, 2.5, 0.1, 0.15)``."""
    r, x, y, al, be = POISSON_POINT
    params = JacobiParams(al, be)
    e1 = abs(semigroup.poisson_kernel(r, x, y, params, method="bailey")
             - semigroup.poisson_kernel(r, x, y, params, method="f4"))
    b, c, u, v = 1.5, 2.5, 0.1, 0.15
    w = 1.0 - u - v
    lhs = specfun.appell_F4(b, c, b, b, u, v)
    rhs = w ** (-c) * specfun.hyp2F1(c / 2.0, (c + 1.0) / 2.0, b, 4.0 * u * v / w ** 2)
    return CheckResult("bailey", max(e1, abs(lhs - rhs)), tol)


# ---------------------------------------------------------------------------
# Laplace identities
# ---------------------------------------------------------------------------

def check_laplace(tol: float = 1e-6) -> CheckResult:
    """``E e^{-t^2 C_h / 8} = sech(t/2)^h`` (h in {1, 2.5, 4}), the ``T_1`` transform and the
    convolution product rule, as relative errors."""
    worst = 0.0
    for t in (0.5, 1.0, 2.0):
        lam = t * t / 8.0
        for h in (1.0, 2.5, 4.0):
            num = laplace_numeric(lambda s: levy.density_C(h, s), lam)
            ref = math.cosh(t / 2.0) ** (-h)
            worst = max(worst, abs(num - ref) / ref)
        num = laplace_numeric(levy.density_T1, lam)
        ref = math.tanh(t / 2.0) / (t / 2.0)
        worst = max(worst, abs(num - ref) / ref)
    h, t = 1.5, 1.0
    num = laplace_numeric(lambda s: levy.conv_T1_C(h, s), t * t / 8.0)
    ref = math.tanh(t / 2.0) / (t / 2.0) * math.cosh(t / 2.0) ** (-h)
    worst = max(worst, abs(num - ref) / ref)
    return CheckResult("laplace", worst, tol, detail="max relative error")


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------

ROUTE_GRID = (-0.8, -0.4, 0.0, 0.4, 0.8)
ROUTE_TIMES = (0.5, 1.0, 2.0)


def check_routes(tol: float = 1e-6, params_list=((0.5, 0.8), (0.5, 0.5))) -> CheckResult:
    """Spectral vs convolution vs (for ``alpha == beta``) ultraspherical on a 5x5 grid."""
    worst = 0.0
    for al, be in params_list:
        params = JacobiParams(al, be)
        for t in ROUTE_TIMES:
            for x in ROUTE_GRID:
                for y in ROUTE_GRID:
                    pt = semigroup.KernelPoint(t, x, y)
                    ps = semigroup.density_spectral(pt, params)
                    worst = max(worst, abs(ps - semigroup.density_convolution(pt, params)))
                    if al == be:
                        worst = max(worst, abs(ps - semigroup.density_ultraspherical(pt, al)))
    return CheckResult("routes", worst, tol)


def check_chapman_kolmogorov(tol: float = 1e-5) -> CheckResult:
    """``int p_s(x, z) p_t(z, y) dz = p_{s+t}(x, y)`` at ``(s, t) = (0.5, 0.7)``, ``x = 0.2``, ``y = -0.1``."""
    s, t, x, y = 0.5, 0.7, 0.2, -0.1
    worst = 0.0
    for al, be in ((0.5, 0.8), (0.5, 0.5)):
        params = JacobiParams(al, be)
        wy = semigroup.stationary_density(y, params)
        # p_s(x,z) = W(z) S_s(x,z) and p_t(z,y) = W(y) S_t(z,y)
        lhs = semigroup.integrate_against_weight(
            lambda z: semigroup.spectral_series(s, x, z, params) * semigroup.spectral_series(t, z, y, params),
            params) * wy
        rhs = semigroup.density_convolution(semigroup.KernelPoint(s + t, x, y), params)
        worst = max(worst, abs(lhs - rhs))
    return CheckResult("chapman_kolmogorov", worst, tol)


def check_detailed_balance(tol: float = 1e-8) -> CheckResult:
    """``W(x) p_t(x, y) = W(y) p_t(y, x)`` with the convolution route."""
    params = JacobiParams(0.5, 0.8)
    worst = 0.0
    for t in (0.5, 1.0):
        for x, y in ((0.2, -0.3), (0.7, 0.1), (-0.6, 0.5)):
            lhs = semigroup.stationary_density(x, params) * semigroup.density_convolution(
                semigroup.KernelPoint(t, x, y), params)
            rhs = semigroup.stationary_density(y, params) * semigroup.density_convolution(
                semigroup.KernelPoint(t, y, x), params)
            worst = max(worst, abs(lhs - rhs))
    return CheckResult("detailed_balance", worst, tol)


def check_normalization(tol: float = 1e-8) -> CheckResult:
    """``int p_t(x, y) dy = 1`` at ``(t, x) = (1, 0.3)`` and the from-zero kernel at ``(1, 0.5)``."""
    worst = 0.0
    for al, be in ((0.5, 0.8), (0.5, 0.5), (0.0, 1.2)):
        params = JacobiParams(al, be)
        val = semigroup.integrate_against_weight(lambda y: semigroup.spectral_series(1.0, 0.3, y, params), params)
        worst = max(worst, abs(val - 1.0))
    coefs = semigroup.from_zero_coefficients(1.0, 0.5)
    val = semigroup.integrate_against_weight(
        lambda y: float(np.polynomial.polynomial.polyval(1 - y * y, coefs)), JacobiParams(0.5, 0.5))
    worst = max(worst, abs(val - 1.0))
    return CheckResult("normalization", worst, tol)


def check_stationarity(tol: float = 1e-8) -> CheckResult:
    """``sup |p_40(x, .) - W|`` over the 5x5 grid at ``alpha = beta = 0.5`` (``lambda_1 = 2``)."""
    params = JacobiParams(0.5, 0.5)
    worst = 0.0
    for x in ROUTE_GRID:
        for y in ROUTE_GRID:
            p = semigroup.density_spectral(semigroup.KernelPoint(40.0, x, y), params)
            worst = max(worst, abs(p - semigroup.stationary_density(y, params)))
    return CheckResult("stationarity", worst, tol)


def check_from_zero(tol: float = 1e-8) -> CheckResult:
    """From-zero kernel of ``Y`` at ``t`` against ``p^X_{t/2}(0, y)`` by the spectral route."""
    worst = 0.0
    for al in (0.5, 1.0):
        params = JacobiParams(al, al)
        for t in (1.0, 3.0):
            for y in (-0.7, 0.0, 0.4):
                a = semigroup.density_from_zero(t, y, al)
                b = semigroup.density_spectral(semigroup.KernelPoint(t / 2.0, 0.0, y), params)
                worst = max(worst, abs(a - b))
    return CheckResult("from_zero", worst, tol)


# ---------------------------------------------------------------------------
# rate functions
# ---------------------------------------------------------------------------

def rate_identity_errors() -> dict:
    """Reference-case errors at ``b = -3``; keys name the identity."""
    b = -3.0
    out = {}
    xz = ldp.x0(b)
    out["x0"] = abs(xz - (1.0 - math.sqrt(28.0)) / 3.0)
    out["J(-2)"] = abs(ldp.rate_J(-2.0, b).value - 0.25)
    phi1 = (7.6 + math.sqrt(9.76)) / 2.0
    j12 = ldp.rate_J(-1.2, b).value
    out["J(-1.2)"] = max(abs(j12 - (0.8 + math.sqrt(2.44))), abs(j12 - (b + phi1)),
                         abs(ldp.domain(-1.2, b).phi1 - phi1), abs(-ldp.Lambda(phi1, -1.2, b) - j12))
    quad = -(xz - b) ** 2 / (4.0 * (xz + 1.0))
    lin = xz + 2.0 + math.sqrt((b - xz) ** 2 + 4.0 * (xz + 1.0))
    out["continuity"] = max(abs(quad + xz), abs(lin + xz))
    h = 1e-6
    left = (quad - (-(xz - h - b) ** 2 / (4.0 * (xz - h + 1.0)))) / h
    right = (xz + h + 2.0 + math.sqrt((b - xz - h) ** 2 + 4.0 * (xz + h + 1.0)) - lin) / h
    out["derivative"] = abs(left - right)
    out["derivative_value"] = 0.5 * (left + right)
    worst = 0.0
    for x in np.linspace(-2.9, xz, 15):
        worst = max(worst, abs(ldp.Lambda(ldp.phi_m(x, b), x, b) + ldp.rate_J(x, b).value))
    out["Lambda(phi_m)"] = worst
    worst = 0.0
    for nu in (0.0, 0.5, 1.0, 2.0):
        worst = max(worst, abs(ldp.x0(-(nu + 1.0)) + ldp.x1(nu) + 1.0))
        for x in np.linspace(-0.5, 3.0, 36):
            if x == 0.0:
                continue
            worst = max(worst, abs(ldp.rate_I(x, nu).value - ldp.rate_J(-(x + 1.0), -(nu + 1.0)).value))
    out["duality"] = worst
    return out


RATE_TOLERANCES = {"x0": 1e-12, "J(-2)": 1e-12, "J(-1.2)": 1e-10, "continuity": 1e-10, "derivative": 1e-4,
                   "Lambda(phi_m)": 1e-12, "duality": 1e-12}


def check_rates(tol: float | None = None) -> list[CheckResult]:
    errs = rate_identity_errors()
    return [CheckResult(f"rate:{k}", errs[k], tol if tol is not None else v) for k, v in RATE_TOLERANCES.items()]


def check_duality(tol: float = 1e-12) -> CheckResult:
    return CheckResult("duality", rate_identity_errors()["duality"], tol)


# name -> check; the rate checks return one result per identity
CHECKS = {
    "recurrence": check_recurrence,
    "orthogonality": check_orthogonality,
    "eigen": check_eigen,
    "theta": check_theta,
    "product": check_product_formula,
    "poisson": check_poisson,
    "bailey": check_bailey,
    "laplace": check_laplace,
    "routes": check_routes,
    "ck": check_chapman_kolmogorov,
    "balance": check_detailed_balance,
    "normalization": check_normalization,
    "stationarity": check_stationarity,
    "from_zero": check_from_zero,
    "rates": check_rates,
    "duality": check_duality,
}


def run_checks(names=None, tol: float | None = None) -> list[CheckResult]:
    """Run the named checks (all by default); ``tol`` overrides every tolerance."""
    names = list(CHECKS) if not names else list(names)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown checks: {', '.join(unknown)}; choose from {', '.join(CHECKS)}")
    out = []
    for name in names:
        fn = CHECKS[name]
        t0 = time.perf_counter()
        res = fn() if tol is None else fn(tol=tol)
        dt = time.perf_counter() - t0
        for r in res if isinstance(res, list) else [res]:
            r.seconds = dt
            out.append(r)
    return out
