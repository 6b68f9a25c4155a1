"""Estimators built from one observed trajectory.

For ``dY = sqrt(1 - Y^2) dW + b Y dt`` the drift MLE is the ratio of
``int Y/(1-Y^2) dY`` to ``int Y^2/(1-Y^2) ds``. With
``F(y) = -log(1 - y^2)/2`` Ito's formula gives

    F(Y_t) - F(Y_0) = int Y/(1-Y^2) dY + (1/2) int (1+Y^2)/(1-Y^2) ds

so the stochastic integral can be replaced by terms that need only the
path values (the ``pathwise`` mode, used by default).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .params import DomainError
from .sde import Trajectory, TrajectoryKind

DEGENERACY_RTOL = 1e-12


class EstimatorMode(str, Enum):
    STOCHASTIC_INTEGRAL = "stochastic_integral"
    PATHWISE = "pathwise"


class DegeneratePathError(ArithmeticError):
    """Information integral too small for a stable ratio."""


@dataclass(frozen=True)
class EstimateResult:
    estimate: float
    numerator: float
    denominator: float
    horizon: float
    mode: EstimatorMode

    def as_dict(self) -> dict:
        return {"estimate": self.estimate, "numerator": self.numerator, "denominator": self.denominator,
                "horizon": self.horizon, "mode": EstimatorMode(self.mode).value}


def _check_jacobi_path(traj: Trajectory) -> None:
    if traj.kind is not TrajectoryKind.JACOBI_PM1:
        raise DomainError(f"expected a jacobi_pm1 trajectory, got {traj.kind.value}")
    if traj.values.size < 2:
        raise DomainError("need at least two observations")
    if np.any(np.abs(traj.values) >= 1.0):
        raise DomainError("path values must lie strictly inside (-1, 1)")


def _info_integral(traj: Trajectory) -> float:
    y = traj.values
    return float(np.trapezoid(y * y / (1.0 - y * y), traj.times))


def _ito_sum(traj: Trajectory) -> float:
    y = traj.values
    return float(np.sum(y[:-1] / (1.0 - y[:-1] ** 2) * np.diff(y)))


def _F(y: float) -> float:
    return -0.5 * math.log1p(-y * y)


def _check_denominator(den: float, horizon: float) -> None:
    if not den >= DEGENERACY_RTOL * horizon:
        raise DegeneratePathError(f"information integral {den:g} below {DEGENERACY_RTOL:g}*t")


def pathwise_numerator(y0: float, yt: float, horizon: float, info: float) -> float:
    """``F(Y_t) - F(Y_0) - t/2 - int Y^2/(1-Y^2) ds``."""
    return _F(yt) - _F(y0) - 0.5 * horizon - info


def mle_b(traj: Trajectory, mode: EstimatorMode | str = EstimatorMode.PATHWISE) -> EstimateResult:
    """Maximum likelihood estimate of the drift ``b`` from a single path."""
    mode = EstimatorMode(mode)
    _check_jacobi_path(traj)
    den = _info_integral(traj)
    _check_denominator(den, traj.horizon)
    if mode is EstimatorMode.PATHWISE:
        num = pathwise_numerator(traj.values[0], traj.values[-1], traj.horizon, den)
    else:
        num = _ito_sum(traj)
    return EstimateResult(num / den, num, den, traj.horizon, mode)


def nu_hat(traj: Trajectory) -> EstimateResult:
    """Index estimator ``(log(1 - Y_t^2) - log(1 - Y_0^2) + t) / (2 int Y^2/(1-Y^2) ds)``.

    Equals ``-mle_b(traj) - 1`` in pathwise mode; the ``Y_0`` term vanishes
    for paths started at 0.
    """
    _check_jacobi_path(traj)
    den = _info_integral(traj)
    _check_denominator(den, traj.horizon)
    y0, yt = traj.values[0], traj.values[-1]
    num = math.log1p(-yt * yt) - math.log1p(-y0 * y0) + traj.horizon
    return EstimateResult(num / (2.0 * den), num, 2.0 * den, traj.horizon, EstimatorMode.PATHWISE)


def nu_hat_log_time(traj: Trajectory, u: float) -> EstimateResult:
    """``nu_hat`` read at time ``t = log u`` (``u > 1``), from the path prefix up to that time."""
    if not u > 1.0:
        raise DomainError("u must exceed 1")
    t = math.log(u)
    k = int(np.searchsorted(traj.times, t, side="right"))
    if k < 2 or not math.isclose(traj.times[k - 1], t, rel_tol=1e-9, abs_tol=1e-12):
        raise DomainError(f"log u = {t} is not a grid time of the trajectory")
    sub = Trajectory(traj.times[:k], traj.values[:k], traj.kind, traj.meta)
    return nu_hat(sub)


def bessel_mle_nu(traj: Trajectory) -> EstimateResult:
    """``log X_t / (2 int ds / X_s)`` for a squared Bessel path started at 1."""
    if traj.kind is not TrajectoryKind.SQUARED_BESSEL:
        raise DomainError(f"expected a squared_bessel trajectory, got {traj.kind.value}")
    x = traj.values
    if np.any(x <= 0):
        raise DomainError("squared Bessel path must stay positive")
    if x[0] != 1.0:
        raise DomainError("path must start at 1")
    den = 2.0 * float(np.trapezoid(1.0 / x, traj.times))
    num = math.log(x[-1])
    return EstimateResult(num / den, num, den, traj.horizon, EstimatorMode.PATHWISE)


def girsanov_loglik(traj: Trajectory, b: float, b0: float,
                    mode: EstimatorMode | str = EstimatorMode.PATHWISE) -> float:
    """``log dQ^b/dQ^{b0} = (b - b0) N - (b^2 - b0^2) D / 2``.

    ``N`` and ``D`` are the numerator and denominator of ``mle_b``; the
    quadratic in ``b`` peaks at ``N / D``.
    """
    res = mle_b(traj, mode)
    return (b - b0) * res.numerator - 0.5 * (b * b - b0 * b0) * res.denominator
