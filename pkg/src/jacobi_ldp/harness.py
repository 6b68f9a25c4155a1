"""Monte Carlo experiments comparing estimator tail probabilities with the
closed-form rate functions.

Paths are simulated in chunks on a thread pool. Path ``i`` at the ``k``-th
horizon always uses stream ``(seed, k, i)``, and estimates are written into
a preallocated array by index, so counts do not depend on the number of
workers.
"""
from __future__ import annotations

import concurrent.futures as cf
import hashlib
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .inference import EstimatorMode, pathwise_numerator
from .ldp import Lambda, lambda_t_numeric, rate_I, rate_J
from .params import ConvergenceError, DomainError
from .sde import (JacobiScheme, check_jacobi_args, default_threads, jacobi_path_statistics,
                  simulate_squared_bessel)

log = logging.getLogger(__name__)

_CHUNK = 512


@dataclass(frozen=True)
class ExperimentConfig:
    b: float
    x_targets: tuple
    t_grid: tuple
    n_paths: int
    dt: float = 1e-3
    seed: int = 0
    estimator_mode: str = EstimatorMode.PATHWISE.value
    y0: float = 0.0
    # Euler with projection turns rare boundary overshoots into spurious tail events
    scheme: str = JacobiScheme.LAMPERTI_IMPLICIT.value

    def __post_init__(self):
        object.__setattr__(self, "x_targets", tuple(float(x) for x in self.x_targets))
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))
        EstimatorMode(self.estimator_mode)
        JacobiScheme(self.scheme)
        if self.n_paths < 100:
            raise DomainError("n_paths must be at least 100")
        if any(t2 <= t1 for t1, t2 in zip(self.t_grid, self.t_grid[1:])) or not self.t_grid:
            raise DomainError("t_grid must be nonempty and increasing")
        if not self.b <= -1.0:
            raise DomainError("b must be <= -1")

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class Cell:
    """Tail count for one ``(x, t)`` pair."""
    family: str
    x: float
    t: float
    side: str
    count: int
    n_paths: int

    @property
    def p_hat(self) -> float:
        return self.count / self.n_paths

    @property
    def log_p(self) -> float | None:
        return math.log(self.p_hat) if self.count else None

    @property
    def se_log_p(self) -> float | None:
        # delta method on the binomial proportion
        if not self.count:
            return None
        p = self.p_hat
        return math.sqrt((1.0 - p) / (self.n_paths * p))

    def as_dict(self) -> dict:
        return {"family": self.family, "x": self.x, "t": self.t, "side": self.side, "count": self.count,
                "n_paths": self.n_paths, "p_hat": self.p_hat, "log_p": self.log_p,
                "se_log_p": self.se_log_p, "zero_count": self.count == 0}


@dataclass
class SlopeFit:
    family: str
    x: float
    slope: float | None
    se: float | None
    rate: float
    cells_used: int
    zero_cells: int

    @property
    def predicted_slope(self) -> float:
        return -self.rate

    @property
    def relative_error(self) -> float | None:
        if self.slope is None or self.rate == 0:
            return None
        return abs(self.slope - self.predicted_slope) / self.rate

    def as_dict(self) -> dict:
        return {"family": self.family, "x": self.x, "slope": self.slope, "se": self.se, "rate": self.rate,
                "predicted_slope": self.predicted_slope, "relative_error": self.relative_error,
                "cells_used": self.cells_used, "zero_cells": self.zero_cells}


@dataclass
class ExperimentResult:
    config: dict
    config_hash: str
    cells: list = field(default_factory=list)
    slopes: list = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def zero_cells(self) -> list:
        return [c for c in self.cells if c.count == 0]

    def slope_for(self, x: float, family: str | None = None) -> SlopeFit:
        for s in self.slopes:
            if s.x == x and (family is None or s.family == family):
                return s
        raise KeyError(x)

    def write(self, jsonl_path, csv_path=None) -> None:
        """One JSON line per cell, then one per slope fit; optional CSV summary of the slopes."""
        with open(jsonl_path, "w") as fh:
            for c in self.cells:
                fh.write(json.dumps({"record": "cell", "config_hash": self.config_hash, **c.as_dict()},
                                    sort_keys=True) + "\n")
            for s in self.slopes:
                fh.write(json.dumps({"record": "slope", "config_hash": self.config_hash, **s.as_dict()},
                                    sort_keys=True) + "\n")
        if csv_path is not None:
            with open(csv_path, "w") as fh:
                fh.write("family,x,slope,se,predicted_slope,relative_error,cells_used,zero_cells\n")
                for s in self.slopes:
                    fh.write(",".join(_fmt(v) for v in (s.family, s.x, s.slope, s.se, s.predicted_slope,
                                                        s.relative_error, s.cells_used, s.zero_cells)) + "\n")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def wls_slope(t, log_p, se):
    """Weighted least-squares slope of ``log_p`` on ``t`` with weights ``1/se^2``."""
    t = np.asarray(t, float)
    yv = np.asarray(log_p, float)
    w = 1.0 / np.asarray(se, float) ** 2
    X = np.column_stack([np.ones_like(t), t])
    A = X.T @ (w[:, None] * X)
    coef = np.linalg.solve(A, X.T @ (w * yv))
    cov = np.linalg.inv(A)
    return float(coef[1]), float(math.sqrt(cov[1, 1]))


def _fit(family: str, x: float, cells: list, rate: float) -> SlopeFit:
    used = [c for c in cells if c.count > 0 and c.count < c.n_paths]
    zeros = sum(c.count == 0 for c in cells)
    if len(used) < 2:
        return SlopeFit(family, x, None, None, rate, len(used), zeros)
    slope, se = wls_slope([c.t for c in used], [c.log_p for c in used], [c.se_log_p for c in used])
    return SlopeFit(family, x, slope, se, rate, len(used), zeros)


def _side(x: float, center: float) -> str:
    # upper tail for targets at or above the true value
    return "upper" if x >= center else "lower"


def _count(est: np.ndarray, x: float, side: str) -> int:
    return int(np.count_nonzero(est >= x) if side == "upper" else np.count_nonzero(est <= x))


def _run_chunks(fn, n_paths: int, threads: int) -> np.ndarray:
    out = np.empty(n_paths)
    bounds = [(s, min(s + _CHUNK, n_paths)) for s in range(0, n_paths, _CHUNK)]
    if threads <= 1:
        for s, e in bounds:
            out[s:e] = fn(s, e)
        return out
    with cf.ThreadPoolExecutor(max_workers=threads) as pool:
        futs = {pool.submit(fn, s, e): (s, e) for s, e in bounds}
        for fut in cf.as_completed(futs):
            s, e = futs[fut]
            out[s:e] = fut.result()
    return out


def mle_estimates(b: float, y0: float, t: float, dt: float, seed: int, stream: int, n_paths: int,
                  mode: str = EstimatorMode.PATHWISE.value, threads: int | None = None,
                  scheme: str = JacobiScheme.LAMPERTI_IMPLICIT.value) -> np.ndarray:
    """Drift MLE for ``n_paths`` simulated paths of horizon ``t`` (paths are not stored)."""
    check_jacobi_args(b, 0.0, y0, strict=True)
    mode = EstimatorMode(mode)
    threads = default_threads() if threads is None else threads

    def chunk(s, e):
        res = np.empty(e - s)
        for j, i in enumerate(range(s, e)):
            ito, den, yt = jacobi_path_statistics(b, 0.0, y0, t, dt, seed, i, stream, scheme)
            num = pathwise_numerator(y0, yt, t, den) if mode is EstimatorMode.PATHWISE else ito
            res[j] = num / den if den > 1e-12 * t else math.nan
        return res

    return _run_chunks(chunk, n_paths, threads)


def run_ldp_experiment(cfg: ExperimentConfig, threads: int | None = None, out_path=None,
                       csv_path=None) -> ExperimentResult:
    """Tail frequencies of the drift MLE over ``cfg.t_grid`` and their decay slopes.

    Targets above ``b`` count ``b_hat >= x``, targets below count
    ``b_hat <= x``. Zero-count cells are kept and flagged but left out of
    the slope fit.
    """
    start = time.perf_counter()
    res = ExperimentResult(asdict(cfg), cfg.config_hash())
    for k, t in enumerate(cfg.t_grid):
        t0 = time.perf_counter()
        est = mle_estimates(cfg.b, cfg.y0, t, cfg.dt, cfg.seed, k, cfg.n_paths, cfg.estimator_mode, threads,
                            cfg.scheme)
        n_bad = int(np.isnan(est).sum())
        if n_bad:
            log.warning("t=%g: %d degenerate paths excluded", t, n_bad)
        for x in cfg.x_targets:
            side = _side(x, cfg.b)
            res.cells.append(Cell("mle_b", x, t, side, _count(est, x, side), cfg.n_paths))
        log.info("t=%g done in %.1fs", t, time.perf_counter() - t0)
    for x in cfg.x_targets:
        cells = [c for c in res.cells if c.x == x]
        res.slopes.append(_fit("mle_b", x, cells, rate_J(x, cfg.b).value))
        if any(c.count == 0 for c in cells):
            log.warning("x=%g: zero-count cells; increase n_paths or reduce t", x)
    res.wall_clock = time.perf_counter() - start
    if out_path is not None:
        res.write(out_path, csv_path)
    return res


def _bessel_grid(u: float, per_unit: int = 200) -> np.ndarray:
    # geometric grid: X grows linearly, so resolution is needed early on
    n = max(int(per_unit * (math.log(u) + math.log(1e4))), 10)
    return np.concatenate([[0.0], np.geomspace(1e-4, u, n)])


def bessel_nu_estimates(nu: float, u: float, seed: int, stream: int, n_paths: int,
                        threads: int | None = None, per_unit: int = 200) -> np.ndarray:
    """``log X_u / (2 int_0^u ds/X_s)`` over squared Bessel paths of dimension ``2(nu+1)`` from 1."""
    threads = default_threads() if threads is None else threads
    grid = _bessel_grid(u, per_unit)

    def chunk(s, e):
        res = np.empty(e - s)
        for j, i in enumerate(range(s, e)):
            x = simulate_squared_bessel(2.0 * (nu + 1.0), 1.0, times=grid, seed=seed, index=i, stream=stream).values
            res[j] = math.log(x[-1]) / (2.0 * np.trapezoid(1.0 / x, grid))
        return res

    return _run_chunks(chunk, n_paths, threads)


def run_duality_experiment(nu: float, u_grid, n_paths: int, seed: int, x_targets, dt: float = 1e-3,
                           threads: int | None = None, out_path=None, csv_path=None,
                           scheme: str = JacobiScheme.LAMPERTI_IMPLICIT.value) -> ExperimentResult:
    """Tail frequencies of the Jacobi index estimator at ``t = log u`` and of
    the Bessel MLE at time ``u``, both against ``I_nu``.

    Each family gets its own slope in ``log u``.
    """
    if not nu >= 0:
        raise DomainError("nu must be nonnegative")
    start = time.perf_counter()
    u_grid = [float(u) for u in u_grid]
    cfg = {"nu": nu, "u_grid": u_grid, "n_paths": n_paths, "seed": seed, "x_targets": list(x_targets), "dt": dt,
           "scheme": JacobiScheme(scheme).value}
    res = ExperimentResult(cfg, hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16])
    b = -(nu + 1.0)
    for k, u in enumerate(u_grid):
        t = math.log(u)
        nu_jac = -mle_estimates(b, 0.0, t, dt, seed, 2 * k, n_paths, threads=threads, scheme=scheme) - 1.0
        nu_bes = bessel_nu_estimates(nu, u, seed, 2 * k + 1, n_paths, threads)
        for x in x_targets:
            side = _side(x, nu)
            res.cells.append(Cell("jacobi", x, t, side, _count(nu_jac, x, side), n_paths))
            res.cells.append(Cell("bessel", x, t, side, _count(nu_bes, x, side), n_paths))
    for fam in ("jacobi", "bessel"):
        for x in x_targets:
            cells = [c for c in res.cells if c.x == x and c.family == fam]
            res.slopes.append(_fit(fam, x, cells, rate_I(x, nu).value))
    res.wall_clock = time.perf_counter() - start
    if out_path is not None:
        res.write(out_path, csv_path)
    return res


def run_cgf_convergence(b: float, x: float, phi_grid, t_grid) -> list[dict]:
    """Rows ``(phi, t, Lambda_t, Lambda, abs_diff, status)``.

    ``status`` is ``ok``, ``slow`` when the gap did not shrink from the
    previous ``t``, or the error message of a failed cell.
    """
    rows = []
    for phi in phi_grid:
        prev = None
        for t in t_grid:
            row = {"phi": float(phi), "t": float(t), "lambda_t": None, "lambda": None, "abs_diff": None}
            try:
                lam = Lambda(phi, x, b)
                lt = lambda_t_numeric(phi, x, b, t)
            except (DomainError, ConvergenceError) as exc:
                row["status"] = f"error: {exc}"
                rows.append(row)
                continue
            diff = abs(lt - lam)
            row.update(lambda_t=lt, **{"lambda": lam}, abs_diff=diff)
            row["status"] = "slow" if prev is not None and diff >= prev and diff > 0 else "ok"
            prev = diff
            rows.append(row)
    return rows
