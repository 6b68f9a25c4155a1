"""Command-line entry point ``jacobi-ldp``.

Exit codes: 0 success, 1 verification failure, 2 usage or domain error,
3 numerical failure (an error JSON is written to stderr).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import checks, harness, inference, ldp, semigroup, sde
from .params import ConvergenceError, DomainError, from_alpha_beta, from_bc, from_dd, from_pq

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

PARAM_PAIRS = (("alpha", "beta", from_alpha_beta), ("p", "q", from_pq), ("b", "c", from_bc),
               ("d", "dprime", from_dd))


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _to_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def emit(rows, fmt: str, out: str | None, columns=None) -> None:
    """Write a list of dicts (or one dict, JSON only) as CSV or JSON."""
    if fmt == "json":
        text = _to_json(rows)
    else:
        if isinstance(rows, dict):
            rows = [rows]
        columns = columns or (list(rows[0]) if rows else [])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in columns])
        text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _add_output(p, default="json"):
    p.add_argument("--format", choices=("csv", "json"), default=default)
    p.add_argument("--out", help="output file (default: standard output)")


def _add_param_flags(p):
    g = p.add_argument_group("parameters (give exactly one pair)")
    for a, b, _ in PARAM_PAIRS:
        g.add_argument(f"--{a}", type=float)
        g.add_argument(f"--{b}", type=float)


def resolve_params(args):
    given = [(a, b, f) for a, b, f in PARAM_PAIRS
             if getattr(args, a, None) is not None or getattr(args, b, None) is not None]
    if len(given) != 1:
        raise UsageError("give exactly one parameter pair: --alpha/--beta, --p/--q, --b/--c or --d/--dprime")
    a, b, f = given[0]
    va, vb = getattr(args, a), getattr(args, b)
    if va is None or vb is None:
        raise UsageError(f"--{a} and --{b} must be given together")
    return f(va, vb)


def _grid(spec: str):
    """``lo:hi:n`` to an evenly spaced array."""
    try:
        lo, hi, n = spec.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    except ValueError as exc:
        raise UsageError(f"bad grid {spec!r}; expected lo:hi:n") from exc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_density(args) -> int:
    params = resolve_params(args)
    if args.grid < 1:
        raise UsageError("--grid must be positive")
    pts = np.linspace(-1.0, 1.0, args.grid + 2)[1:-1]
    xs = [args.x] if args.x is not None else pts
    ys = [args.y] if args.y is not None else pts
    rows, worst = [], 0.0
    for x in xs:
        for y in ys:
            pt = semigroup.KernelPoint(args.t, float(x), float(y))
            ps = semigroup.density_spectral(pt, params)
            pc = semigroup.density_convolution(pt, params)
            diff = abs(ps - pc)
            worst = max(worst, diff)
            rows.append({"x": float(x), "y": float(y), "t": args.t, "p_spectral": ps, "p_convolution": pc,
                         "abs_diff": diff})
    emit(rows, args.format, args.out, ["x", "y", "t", "p_spectral", "p_convolution", "abs_diff"])
    if worst >= args.tol:
        print(f"routes disagree: max abs_diff {worst:.3e} >= tol {args.tol:g}", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_verify(args) -> int:
    names = [n for part in (args.only or []) for n in part.split(",") if n]
    try:
        results = checks.run_checks(names or None, args.tol)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc
    if args.format == "json":
        emit([r.as_dict() for r in results], "json", args.out)
    else:
        lines = [f"{'check':24s} {'error':>10s} {'tol':>8s}  result"]
        lines += [f"{r.name:24s} {r.error:10.3e} {r.tol:8.1e}  {'PASS' if r.passed else 'FAIL'}" for r in results]
        text = "\n".join(lines) + "\n"
        Path(args.out).write_text(text) if args.out else sys.stdout.write(text)
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def _path_name(out: str, i: int, n: int) -> Path:
    p = Path(out)
    return p if n == 1 else p.with_name(f"{p.stem}_{i:05d}{p.suffix or '.csv'}")


def cmd_simulate(args) -> int:
    if args.n_paths < 1:
        raise UsageError("--n-paths must be positive")
    if args.n_paths > 1 and not args.out:
        raise UsageError("--out is required when --n-paths > 1")
    if args.process == "jacobi":
        if args.b is None:
            raise UsageError("--b is required for the Jacobi SDE")
        trajs = sde.simulate_jacobi_batch(args.b, args.c, args.y0, args.t, args.dt, args.seed, args.n_paths,
                                          threads=args.threads, strict=not args.no_strict, scheme=args.scheme)
    elif args.process == "bessel":
        if args.dim is None:
            raise UsageError("--dim is required for squared Bessel paths")
        trajs = [sde.simulate_squared_bessel(args.dim, args.z0, args.t, args.dt, args.seed, index=i)
                 for i in range(args.n_paths)]
    else:
        if args.d is None or args.dprime is None:
            raise UsageError("--d and --dprime are required for the skew product")
        trajs = []
        for i in range(args.n_paths):
            z1 = sde.simulate_squared_bessel(args.d, args.z0, args.t, args.dt, args.seed, index=i, stream=0)
            z2 = sde.simulate_squared_bessel(args.dprime, args.z0prime, args.t, args.dt, args.seed, index=i,
                                             stream=1)
            trajs.append(sde.skew_product(z1, z2))
    if not args.out:
        tr = trajs[0]
        sys.stdout.write("t,value\n" + "".join(f"{t:.17g},{v:.17g}\n" for t, v in zip(tr.times, tr.values)))
        return EXIT_OK
    for i, tr in enumerate(trajs):
        tr.write(_path_name(args.out, i, len(trajs)))
    return EXIT_OK


def cmd_estimate(args) -> int:
    traj = sde.Trajectory.read(args.input)
    if args.estimator == "mle":
        res = inference.mle_b(traj, args.mode).as_dict()
    elif args.estimator == "nu":
        res = inference.nu_hat(traj).as_dict()
    elif args.estimator == "bessel":
        res = inference.bessel_mle_nu(traj).as_dict()
    else:
        if args.b is None or args.b0 is None:
            raise UsageError("girsanov needs --b and --b0")
        res = {"loglik": inference.girsanov_loglik(traj, args.b, args.b0, args.mode), "b": args.b, "b0": args.b0}
    emit(res, "json", args.out)
    return EXIT_OK


def cmd_rate(args) -> int:
    if (args.b is None) == (args.nu is None):
        raise UsageError("give exactly one of --b (rate J_b) or --nu (rate I_nu)")
    if (args.x is None) == (args.x_grid is None):
        raise UsageError("give exactly one of --x or --x-grid")
    xs = [args.x] if args.x is not None else _grid(args.x_grid)
    rows = []
    for x in xs:
        if args.b is not None:
            r = ldp.rate_J(float(x), args.b)
            rows.append({"x": float(x), "b": args.b, "rate": "J", "value": r.value, "branch": r.branch.value})
        else:
            r = ldp.rate_I(float(x), args.nu)
            rows.append({"x": float(x), "nu": args.nu, "rate": "I", "value": r.value, "branch": r.branch.value})
    emit(rows[0] if args.x is not None and args.format == "json" else rows, args.format, args.out)
    return EXIT_OK


def cmd_domain(args) -> int:
    dom = ldp.domain(args.x, args.b)
    out = dom.as_dict()
    out["threshold"] = ldp.case_threshold(args.b)
    if dom.case is ldp.CgfCase.I:
        out["phi_m"] = ldp.phi_m(args.x, args.b)
    emit(out, "json", args.out)
    return EXIT_OK


def _read_config(path: str) -> dict:
    cfg = {}
    for ln, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{ln}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        cfg[k.replace("-", "_")] = v
    return cfg


def _floats(v) -> list:
    if isinstance(v, str):
        return [float(s) for s in v.replace(",", " ").split()]
    return [float(s) for s in v]


def cmd_mc_ldp(args) -> int:
    cfg = _read_config(args.config) if args.config else {}
    for key in ("b", "x", "t", "n_paths", "dt", "seed", "mode", "scheme"):
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    missing = [k for k in ("b", "x", "t") if k not in cfg]
    if missing:
        raise UsageError("mc-ldp needs " + ", ".join(f"--{k}" for k in missing))
    conf = harness.ExperimentConfig(
        b=float(cfg["b"]), x_targets=_floats(cfg["x"]), t_grid=_floats(cfg["t"]),
        n_paths=int(cfg.get("n_paths", 10000)), dt=float(cfg.get("dt", 1e-3)), seed=int(cfg.get("seed", 0)),
        estimator_mode=str(cfg.get("mode", "pathwise")),
        scheme=str(cfg.get("scheme", sde.JacobiScheme.LAMPERTI_IMPLICIT.value)))
    res = harness.run_ldp_experiment(conf, threads=args.threads, out_path=args.out, csv_path=args.csv)
    emit({"config_hash": res.config_hash, "cells": [c.as_dict() for c in res.cells],
          "slopes": [s.as_dict() for s in res.slopes], "wall_clock": res.wall_clock}, "json", None)
    return EXIT_OK


def cmd_mc_duality(args) -> int:
    res = harness.run_duality_experiment(args.nu, args.u, args.n_paths, args.seed, args.x, dt=args.dt,
                                         threads=args.threads, out_path=args.out, csv_path=args.csv,
                                         scheme=args.scheme)
    emit({"config_hash": res.config_hash, "cells": [c.as_dict() for c in res.cells],
          "slopes": [s.as_dict() for s in res.slopes], "wall_clock": res.wall_clock}, "json", None)
    return EXIT_OK


def cmd_cgf(args) -> int:
    rows = harness.run_cgf_convergence(args.b, args.x, args.phi, args.t)
    emit(rows, args.format, args.out, ["phi", "t", "lambda_t", "lambda", "abs_diff", "status"])
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jacobi-ldp", description="Jacobi diffusion densities, simulation, "
                                 "drift estimation and large-deviation rates.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", help="transition density by two routes on a grid")
    _add_param_flags(p)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--grid", type=int, default=5, help="interior points per axis")
    p.add_argument("--x", type=float, help="single starting point instead of the grid")
    p.add_argument("--y", type=float, help="single end point instead of the grid")
    p.add_argument("--tol", type=float, default=1e-6)
    _add_output(p, "csv")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("verify", help="run the identity checks")
    p.add_argument("--only", action="append", help=f"comma list from: {', '.join(checks.CHECKS)}")
    p.add_argument("--tol", type=float, help="override every tolerance")
    _add_output(p, "csv")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="simulate trajectories to CSV + JSON sidecar")
    p.add_argument("--process", choices=("jacobi", "bessel", "skew"), default="jacobi")
    p.add_argument("--b", type=float)
    p.add_argument("--c", type=float, default=0.0)
    p.add_argument("--y0", type=float, default=0.0)
    p.add_argument("--dim", type=float)
    p.add_argument("--d", type=float)
    p.add_argument("--dprime", type=float)
    p.add_argument("--z0", type=float, default=1.0)
    p.add_argument("--z0prime", type=float, default=1.0)
    p.add_argument("--t", type=float, required=True, help="horizon")
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n-paths", type=int, default=1)
    p.add_argument("--threads", type=int)
    p.add_argument("--no-strict", action="store_true", help="allow attainable boundaries")
    p.add_argument("--scheme", choices=[m.value for m in sde.JacobiScheme], default="euler-projection",
                   help="Jacobi stepping scheme")
    p.add_argument("--out", help="CSV path; with several paths an index suffix is added")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="estimators from a trajectory CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--estimator", choices=("mle", "nu", "bessel", "girsanov"), default="mle")
    p.add_argument("--mode", choices=[m.value for m in inference.EstimatorMode], default="pathwise")
    p.add_argument("--b", type=float)
    p.add_argument("--b0", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("rate", help="rate functions J_b or I_nu")
    p.add_argument("--b", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--x", type=float)
    p.add_argument("--x-grid", help="lo:hi:n")
    _add_output(p)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("domain", help="domain of the limit cumulant generating function")
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_domain)

    p = sub.add_parser("mc-ldp", help="Monte Carlo tail frequencies of the drift MLE")
    p.add_argument("--config", help="flat key=value file (keys as the long flags)")
    p.add_argument("--b", type=float)
    p.add_argument("--x", type=float, nargs="+")
    p.add_argument("--t", type=float, nargs="+")
    p.add_argument("--n-paths", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=[m.value for m in inference.EstimatorMode])
    p.add_argument("--scheme", choices=[m.value for m in sde.JacobiScheme],
                   help="Jacobi stepping scheme (default lamperti-implicit)")
    p.add_argument("--threads", type=int)
    p.add_argument("--out", help="JSON-lines file of cells and slope fits")
    p.add_argument("--csv", help="CSV summary of the slope fits")
    p.set_defaults(func=cmd_mc_ldp)

    p = sub.add_parser("mc-duality", help="Jacobi index estimator vs Bessel MLE tail frequencies")
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--u", type=float, nargs="+", required=True)
    p.add_argument("--x", type=float, nargs="+", required=True)
    p.add_argument("--n-paths", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--scheme", choices=[m.value for m in sde.JacobiScheme], default="lamperti-implicit")
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_mc_duality)

    p = sub.add_parser("cgf", help="finite-t cumulant generating function against its limit")
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--phi", type=float, nargs="+", required=True)
    p.add_argument("--t", type=float, nargs="+", required=True)
    _add_output(p, "csv")
    p.set_defaults(func=cmd_cgf)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except DomainError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, ArithmeticError) as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}, sort_keys=True) + "\n")
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
