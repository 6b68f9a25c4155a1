"""Jacobi process parameters and conversions between parameterizations.

The process is carried by its Jacobi-polynomial indices ``(alpha, beta)``.
Every other parameterization in use is a read-only view:

* ``(p, q)``   generator ``(1 - x^2) d^2 + (p x + q) d`` on ``[-1, 1]``
* ``(b, c)``   SDE ``dY = sqrt(1 - Y^2) dW + (b Y + c) dt`` with ``Y_t = X_{t/2}``
* ``(d, d')``  ``[0, 1]`` Jacobi process driven by squared Bessel dimensions
"""
from __future__ import annotations

from dataclasses import dataclass


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class ConvergenceError(ArithmeticError):
    """A series or quadrature did not reach its tolerance within budget."""


@dataclass(frozen=True)
class JacobiParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > -1.0 and self.beta > -1.0):
            raise DomainError(
                f"alpha and beta must exceed -1, got alpha={self.alpha}, beta={self.beta}"
            )

    @property
    def p(self) -> float:
        return -(self.beta + self.alpha + 2.0)

    @property
    def q(self) -> float:
        return self.beta - self.alpha

    @property
    def b(self) -> float:
        return self.p / 2.0

    @property
    def c(self) -> float:
        return self.q / 2.0

    @property
    def d(self) -> float:
        return 2.0 * (self.beta + 1.0)

    @property
    def dprime(self) -> float:
        return 2.0 * (self.alpha + 1.0)

    @property
    def gamma(self) -> float:
        return (self.alpha + self.beta + 1.0) / 2.0

    @property
    def a(self) -> float:
        return self.alpha + self.beta + 2.0

    @property
    def ultraspherical(self) -> bool:
        return self.alpha == self.beta

    def eigenvalue(self, n: int) -> float:
        """``n (n + alpha + beta + 1)``, the decay rate of the n-th mode."""
        return n * (n + self.alpha + self.beta + 1.0)

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta}


def from_alpha_beta(alpha: float, beta: float) -> JacobiParams:
    return JacobiParams(float(alpha), float(beta))


def from_pq(p: float, q: float) -> JacobiParams:
    # p = -(alpha + beta + 2), q = beta - alpha
    return JacobiParams(-(p + q) / 2.0 - 1.0, (q - p) / 2.0 - 1.0)


def from_bc(b: float, c: float) -> JacobiParams:
    return from_pq(2.0 * b, 2.0 * c)


def from_dd(d: float, dprime: float) -> JacobiParams:
    return JacobiParams(dprime / 2.0 - 1.0, d / 2.0 - 1.0)


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy shared by every series and quadrature."""

    max_terms: int = 400
    abs_tol: float = 1e-14
    quadrature_points: int = 80

    def __post_init__(self):
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if not (0.0 < self.abs_tol < 1.0):
            raise ValueError("abs_tol must lie in (0, 1)")
        if self.quadrature_points < 1:
            raise ValueError("quadrature_points must be >= 1")


DEFAULT_CONTROL = SeriesControl()
