"""Path simulation for the Jacobi SDE and squared Bessel processes.

Every trajectory draws from its own counter-based stream keyed by
``(seed, stream, index)``, so a batch gives identical paths whatever the
order or thread count used to produce it.
"""
from __future__ import annotations

import concurrent.futures as cf
import json
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numba
import numpy as np

from .params import DomainError, JacobiParams, from_bc

BOUNDARY_EPS = 1e-12
THREADS_ENV = "JACOBI_LDP_THREADS"
_HALF_PI = 0.5 * math.pi


def default_threads() -> int:
    """Worker count from ``JACOBI_LDP_THREADS``, else the CPU count."""
    env = os.environ.get(THREADS_ENV)
    if env:
        n = int(env)
        if n < 1:
            raise ValueError(f"{THREADS_ENV} must be a positive integer")
        return n
    return os.cpu_count() or 1


class TrajectoryKind(str, Enum):
    JACOBI_PM1 = "jacobi_pm1"
    JACOBI_01 = "jacobi_01"
    SQUARED_BESSEL = "squared_bessel"


class JacobiScheme(str, Enum):
    EULER_PROJECTION = "euler-projection"
    LAMPERTI_IMPLICIT = "lamperti-implicit"


SCHEME_TAGS = {
    JacobiScheme.EULER_PROJECTION: "euler-maruyama+projection(1e-12)",
    JacobiScheme.LAMPERTI_IMPLICIT: "drift-implicit euler on arcsin(y)",
}


class BoundaryType(str, Enum):
    UNATTAINABLE = "unattainable"
    REFLECTING = "reflecting"


@dataclass
class Trajectory:
    times: np.ndarray
    values: np.ndarray
    kind: TrajectoryKind
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.kind = TrajectoryKind(self.kind)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if self.times.size and self.times[0] != 0.0:
            raise ValueError("times must start at 0")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def write(self, csv_path) -> Path:
        """Write ``t,value`` rows (17 significant digits) plus a JSON sidecar."""
        csv_path = Path(csv_path)
        with open(csv_path, "w", newline="") as fh:
            fh.write("t,value\n")
            for t, v in zip(self.times, self.values):
                fh.write(f"{t:.17g},{v:.17g}\n")
        side = sidecar_path(csv_path)
        side.write_text(json.dumps({"kind": self.kind.value, **self.meta}, sort_keys=True, indent=1) + "\n")
        return csv_path

    @classmethod
    def read(cls, csv_path) -> "Trajectory":
        csv_path = Path(csv_path)
        data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
        meta = {}
        side = sidecar_path(csv_path)
        if side.exists():
            meta = json.loads(side.read_text())
        kind = meta.pop("kind", TrajectoryKind.JACOBI_PM1.value)
        return cls(data[:, 0], data[:, 1], kind, meta)


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


@dataclass(frozen=True)
class BoundaryReport:
    lower: BoundaryType
    upper: BoundaryType


def classify_boundaries(params: JacobiParams) -> BoundaryReport:
    """Boundary behaviour of the ``[0, 1]`` process with dimensions ``(d, d')``.

    0 is unattainable iff ``d >= 2`` (``beta >= 0``) and 1 iff ``d' >= 2``
    (``alpha >= 0``); otherwise the boundary is reflecting.
    """
    lower = BoundaryType.UNATTAINABLE if params.d >= 2.0 else BoundaryType.REFLECTING
    upper = BoundaryType.UNATTAINABLE if params.dprime >= 2.0 else BoundaryType.REFLECTING
    return BoundaryReport(lower, upper)


def path_generator(seed: int, index: int = 0, stream: int = 0) -> np.random.Generator:
    """Independent Philox stream for trajectory ``index`` of ``stream``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.Philox(ss))


def _n_steps(horizon: float, dt: float) -> int:
    if not (horizon > 0 and dt > 0):
        raise DomainError("horizon and dt must be positive")
    if dt > horizon:
        raise DomainError("dt must not exceed the horizon")
    return int(round(horizon / dt))


# ---------------------------------------------------------------------------
# Jacobi SDE
# ---------------------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _euler_jacobi(y0, b, c, dt, z, eps):
    n = z.size
    out = np.empty(n + 1)
    out[0] = y0
    y = y0
    sq = math.sqrt(dt)
    hi = 1.0 - eps
    for i in range(n):
        y = y + (b * y + c) * dt + math.sqrt(max(1.0 - y * y, 0.0)) * sq * z[i]
        if y > hi:
            y = hi
        elif y < -hi:
            y = -hi
        out[i + 1] = y
    return out


@numba.njit(cache=True, nogil=True)
def _euler_jacobi_stats(y0, b, c, dt, z, eps):
    """Same scheme as ``_euler_jacobi`` but returns only the estimator inputs:
    left-point Ito sum of ``Y/(1-Y^2) dY``, trapezoid of ``Y^2/(1-Y^2)``
    and the terminal value."""
    y = y0
    sq = math.sqrt(dt)
    hi = 1.0 - eps
    ito = 0.0
    acc = 0.0
    inv = 1.0 / (1.0 - y * y)
    g_first = y * y * inv
    for i in range(z.size):
        y_new = y + (b * y + c) * dt + math.sqrt(max(1.0 - y * y, 0.0)) * sq * z[i]
        if y_new > hi:
            y_new = hi
        elif y_new < -hi:
            y_new = -hi
        ito += y * inv * (y_new - y)
        inv = 1.0 / (1.0 - y_new * y_new)
        acc += y_new * y_new * inv
        y = y_new
    # trapezoid: interior points weight dt, endpoints dt/2
    g_last = y * y * inv
    trap = (acc - 0.5 * g_last + 0.5 * g_first) * dt
    return ito, trap, y


@numba.njit(cache=True, nogil=True)
def _implicit_theta_step(r, u, k, c, dt):
    """Root in ``(-pi/2, pi/2)`` of ``u - dt (k sin u + c) / cos u = r``.

    For ``k + |c| < 0`` the left side increases from -inf to inf, so the
    root is unique. Newton runs on the pole-free form
    ``h(u) = (u - r) cos u - dt (k sin u + c)`` (same sign, same root) from
    the guess ``u``, inside a shrinking bracket, and stops once a step is
    below 1e-9; the remaining error is then of order step^2. Returns
    ``(root, sin, cos)``, the last two updated to first order in the final
    step (exact to rounding).
    """
    lo = -_HALF_PI
    hi = _HALF_PI
    u = min(max(u, -_HALF_PI + 1e-9), _HALF_PI - 1e-9)
    for _ in range(200):
        s = math.sin(u)
        co = math.cos(u)
        h = (u - r) * co - dt * (k * s + c)
        if h > 0.0:
            hi = u
        else:
            lo = u
        dh = co - (u - r) * s - dt * k * co
        if dh > 0.0:
            step = h / dh
            # tested before the bracket: at the root the update may round onto lo or hi
            if abs(step) <= 1e-9:
                return u - step, s - co * step, co + s * step
            un = u - step
        else:
            un = 0.5 * (lo + hi)
        if not (lo < un < hi):
            un = 0.5 * (lo + hi)
        u = un
    return u, math.sin(u), math.cos(u)


@numba.njit(cache=True, nogil=True)
def _implicit_jacobi(y0, b, c, dt, z):
    n = z.size
    out = np.empty(n + 1)
    out[0] = y0
    th = math.asin(y0)
    s = y0
    co = math.cos(th)
    sq = math.sqrt(dt)
    k = b + 0.5
    for i in range(n):
        r = th + sq * z[i]
        # explicit Euler step as the starting guess
        th, s, co = _implicit_theta_step(r, r + dt * (k * s + c) / co, k, c, dt)
        out[i + 1] = s
    return out


@numba.njit(cache=True, nogil=True)
def _implicit_jacobi_stats(y0, b, c, dt, z):
    """``_euler_jacobi_stats`` for the implicit scheme; ``Y^2/(1-Y^2) = tan^2``
    is evaluated from the angle, so it stays accurate near the boundary."""
    th = math.asin(y0)
    sq = math.sqrt(dt)
    k = b + 0.5
    ito = 0.0
    acc = 0.0
    y = y0
    co = math.cos(th)
    tn = y / co
    g_first = tn * tn
    for i in range(z.size):
        r = th + sq * z[i]
        th, y_new, co_new = _implicit_theta_step(r, r + dt * (k * y + c) / co, k, c, dt)
        # Y / (1 - Y^2) = tan / cos
        ito += tn / co * (y_new - y)
        co = co_new
        tn = y_new / co
        acc += tn * tn
        y = y_new
    g_last = tn * tn
    trap = (acc - 0.5 * g_last + 0.5 * g_first) * dt
    return ito, trap, y


def check_jacobi_args(b: float, c: float, y0: float, strict: bool) -> JacobiParams:
    params = from_bc(b, c)
    if not -1.0 < y0 < 1.0:
        raise DomainError("y0 must lie in (-1, 1)")
    if strict:
        rep = classify_boundaries(params)
        if rep.lower is not BoundaryType.UNATTAINABLE or rep.upper is not BoundaryType.UNATTAINABLE:
            raise DomainError(
                f"boundaries attainable for (b, c)=({b}, {c}) (alpha={params.alpha}, beta={params.beta}); "
                "strict mode needs alpha, beta >= 0"
            )
    return params


def _resolve_scheme(scheme, b: float, c: float) -> JacobiScheme:
    scheme = JacobiScheme(scheme)
    if scheme is JacobiScheme.LAMPERTI_IMPLICIT and not abs(c) < -b - 0.5:
        raise DomainError(f"the implicit scheme needs |c| < -b - 1/2 (got b={b}, c={c})")
    return scheme


def simulate_jacobi(b: float, c: float, y0: float, horizon: float, dt: float, seed: int,
                    index: int = 0, strict: bool = True, stream: int = 0,
                    scheme: JacobiScheme | str = JacobiScheme.EULER_PROJECTION) -> Trajectory:
    """Path of ``dY = sqrt(1 - Y^2) dW + (b Y + c) dt`` on a grid of step ``dt``.

    ``euler-projection`` (default) is Euler-Maruyama with overshoots past
    ``+-(1 - 1e-12)`` projected back onto that level. ``lamperti-implicit``
    steps ``theta = arcsin(Y)``, which solves
    ``d theta = ((b + 1/2) sin theta + c) / cos theta dt + dW``, with a
    drift-implicit Euler step; it never leaves ``(-1, 1)``. With ``strict``
    (default) parameter sets whose boundaries are attainable are refused.
    """
    params = check_jacobi_args(b, c, y0, strict)
    scheme = _resolve_scheme(scheme, b, c)
    n = _n_steps(horizon, dt)
    z = path_generator(seed, index, stream).standard_normal(n)
    if scheme is JacobiScheme.EULER_PROJECTION:
        values = _euler_jacobi(float(y0), float(b), float(c), float(dt), z, BOUNDARY_EPS)
    else:
        values = _implicit_jacobi(float(y0), float(b), float(c), float(dt), z)
    meta = {
        "params": {"b": b, "c": c, "alpha": params.alpha, "beta": params.beta},
        "y0": y0, "seed": seed, "index": index, "stream": stream, "dt": dt,
        "scheme": SCHEME_TAGS[scheme],
    }
    return Trajectory(np.arange(n + 1) * dt, values, TrajectoryKind.JACOBI_PM1, meta)


def simulate_jacobi_batch(b: float, c: float, y0: float, horizon: float, dt: float, seed: int,
                          n_paths: int, threads: int | None = None, strict: bool = True,
                          scheme: JacobiScheme | str = JacobiScheme.EULER_PROJECTION) -> list[Trajectory]:
    """Paths ``0 .. n_paths-1`` of ``simulate_jacobi``; identical for any ``threads``."""
    check_jacobi_args(b, c, y0, strict)
    scheme = _resolve_scheme(scheme, b, c)
    threads = default_threads() if threads is None else threads

    def one(i):
        return simulate_jacobi(b, c, y0, horizon, dt, seed, index=i, strict=strict, scheme=scheme)

    if threads <= 1:
        return [one(i) for i in range(n_paths)]
    with cf.ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(n_paths)))


def jacobi_path_statistics(b: float, c: float, y0: float, horizon: float, dt: float, seed: int,
                           index: int, stream: int = 0,
                           scheme: JacobiScheme | str = JacobiScheme.EULER_PROJECTION):
    """``(ito_sum, info_integral, terminal_value)`` for one path without storing it.

    Same path as ``simulate_jacobi`` with the same stream and scheme; the
    integrals agree with the stored-path estimators up to rounding.
    """
    scheme = _resolve_scheme(scheme, b, c)
    n = _n_steps(horizon, dt)
    z = path_generator(seed, index, stream).standard_normal(n)
    if scheme is JacobiScheme.EULER_PROJECTION:
        return _euler_jacobi_stats(float(y0), float(b), float(c), float(dt), z, BOUNDARY_EPS)
    return _implicit_jacobi_stats(float(y0), float(b), float(c), float(dt), z)


# ---------------------------------------------------------------------------
# squared Bessel
# ---------------------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _bessel_compose(z0, steps, chi, gauss):
    n = steps.size
    out = np.empty(n + 1)
    out[0] = z0
    x = z0
    for i in range(n):
        h = steps[i]
        m = math.sqrt(x / h) + gauss[i]
        x = h * (chi[i] + m * m)
        out[i + 1] = x
    return out


def simulate_squared_bessel(dim: float, z0: float, horizon: float | None = None, dt: float | None = None,
                            seed: int = 0, index: int = 0, times=None, stream: int = 0) -> Trajectory:
    """Squared Bessel path ``dX = 2 sqrt(X) dW + dim dt`` sampled exactly in law.

    Over a step ``h`` the transition is ``h`` times a noncentral chi-square
    with ``dim`` degrees of freedom and noncentrality ``X/h``. For
    ``dim >= 1`` it is drawn as ``h (chi2_{dim-1} + (N + sqrt(X/h))^2)``;
    below that, numpy's noncentral chi-square sampler is used step by step.
    ``times`` may replace ``(horizon, dt)`` with any increasing grid from 0.
    """
    if not dim > 0:
        raise DomainError("dimension must be positive")
    if not z0 >= 0:
        raise DomainError("z0 must be nonnegative")
    if times is None:
        n = _n_steps(horizon, dt)
        times = np.arange(n + 1) * dt
    times = np.asarray(times, dtype=float)
    steps = np.diff(times)
    rng = path_generator(seed, index, stream)
    if dim >= 1.0:
        chi = rng.chisquare(dim - 1.0, steps.size) if dim > 1.0 else np.zeros(steps.size)
        gauss = rng.standard_normal(steps.size)
        values = _bessel_compose(float(z0), steps, chi, gauss)
        scheme = "exact: chi2(dim-1) + shifted gaussian square"
    else:
        values = np.empty(steps.size + 1)
        values[0] = z0
        for i, h in enumerate(steps):
            values[i + 1] = h * rng.noncentral_chisquare(dim, values[i] / h)
        scheme = "exact: noncentral chi2"
    meta = {"dim": dim, "z0": z0, "seed": seed, "index": index, "scheme": scheme,
            "dt": float(steps[0]) if steps.size else 0.0}
    return Trajectory(times, values, TrajectoryKind.SQUARED_BESSEL, meta)


def skew_product(z1: Trajectory, z2: Trajectory, n_out: int | None = None) -> Trajectory:
    """Jacobi path on ``[0, 1]`` from two squared Bessel paths.

    ``R = Z1 / (Z1 + Z2)`` is read on the clock ``A_t = int_0^t ds / (Z1 + Z2)``
    (trapezoid rule) and resampled on an even grid in ``A`` by linear
    interpolation. The result has dimensions ``(d, d') = (dim1, dim2)``.
    """
    for z in (z1, z2):
        if z.kind is not TrajectoryKind.SQUARED_BESSEL:
            raise ValueError("skew_product needs squared Bessel trajectories")
    if z1.times.shape != z2.times.shape or not np.array_equal(z1.times, z2.times):
        raise ValueError("trajectories must share one time grid")
    total = z1.values + z2.values
    if np.any(total <= 0):
        k = int(np.argmax(total <= 0))
        raise ZeroDivisionError(f"both components vanish at t={z1.times[k]}")
    ratio = z1.values / total
    inv = 1.0 / total
    clock = np.concatenate([[0.0], np.cumsum(0.5 * (inv[1:] + inv[:-1]) * np.diff(z1.times))])
    n_out = z1.times.size if n_out is None else n_out
    grid = np.linspace(0.0, clock[-1], n_out)
    values = np.interp(grid, clock, ratio)
    meta = {"d": z1.meta.get("dim"), "dprime": z2.meta.get("dim"), "clock_end": float(clock[-1]),
            "seed": z1.meta.get("seed"), "index": z1.meta.get("index"), "scheme": "skew-product time change"}
    return Trajectory(grid, values, TrajectoryKind.JACOBI_01, meta)
