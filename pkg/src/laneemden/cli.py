"""Command-line interface.

Every subcommand writes a JSON report (and CSV files for radial fields) and
prints the report path. Exit codes: 0 success, 2 invalid input, 3 solver did
not converge (artifacts are still written, with ``status`` set).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .exponents import ProblemParams, RegimeError, derive_exponents, validate_regime
from .potentials import build_potential, check_hypotheses
from .profile import ProfileError, profile_asymptotics, shoot_profile
from .radial import RadialFunction, RadialGrid
from .solver import (MonotonicityError, SolveOptions, lipschitz_check, nu_of_k, solve)

SCHEMA_VERSION = "laneemden/1"
OUTDIR_ENV = "LANEEMDEN_OUTDIR"

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_CONVERGED = 3


class ValidationError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """Usage errors become validation errors, reported as JSON like the rest."""

    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _clean(obj):
    """Make a report JSON-safe: non-finite floats become null, numpy scalars plain."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if hasattr(obj, "value") and not isinstance(obj, (str, bytes)):
        return obj.value
    return obj


def _outdir(args) -> Path:
    base = args.out_dir or os.environ.get(OUTDIR_ENV) or "."
    path = Path(base)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _report_path(args, default_name: str) -> Path:
    if getattr(args, "out", None):
        path = Path(args.out)
        if not path.is_absolute() and (args.out_dir or os.environ.get(OUTDIR_ENV)):
            path = _outdir(args) / path
        path.parent.mkdir(parents=True, exist_ok=True)
        return path
    return _outdir(args) / default_name


def _write_json(path: Path, payload: dict) -> None:
    body = {"schema": SCHEMA_VERSION, **payload,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds")}
    path.write_text(json.dumps(_clean(body), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    data = np.column_stack([np.asarray(columns[n], dtype=float) for n in names])
    np.savetxt(path, data, delimiter=",", header=",".join(names), comments="", fmt="%.17g")


def _read_csv(path: str) -> dict[str, np.ndarray]:
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from None
    return {name: data[:, i] for i, name in enumerate(header)}


def _grid_from_nodes(r: np.ndarray) -> RadialGrid:
    if r.ndim != 1 or len(r) < 16 or np.any(r <= 0):
        raise ValidationError("input radii must be at least 16 positive values")
    ratio = r[1:] / r[:-1]
    if not np.allclose(ratio, ratio[0], rtol=1e-9, atol=0) or ratio[0] <= 1:
        raise ValidationError("input radii must be geometrically spaced and increasing")
    return RadialGrid(float(r[0]), float(r[-1]), np.array(r, dtype=float))


# --- validation -------------------------------------------------------------


def _params(args) -> ProblemParams:
    try:
        return ProblemParams(args.dim, args.p)
    except RegimeError as exc:
        raise ValidationError(str(exc)) from None


def _require_regime(params: ProblemParams, beta: float = 0.0) -> None:
    rep = validate_regime(params, beta=beta)
    if not rep.passed:
        raise ValidationError("; ".join(c.detail for c in rep.failures()))


def _potential(spec: str):
    try:
        return build_potential(spec)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def _positive(name: str, value: float | None) -> None:
    if value is not None and not (math.isfinite(value) and value > 0):
        raise ValidationError(f"{name} must be a positive number, got {value}")


def _solve_options(args) -> SolveOptions:
    _positive("--tol", args.tol)
    if args.max_iter < 1:
        raise ValidationError("--max-iter must be at least 1")
    _positive("--grid-min", args.grid_min)
    _positive("--grid-max", args.grid_max)
    if args.grid_min is not None:
        r_max = args.grid_max if args.grid_max is not None else 1.0 / args.grid_min
        if not args.grid_min < 1 < r_max:
            raise ValidationError("grid bounds must satisfy 0 < grid-min < 1 < grid-max")
    elif args.grid_max is not None:
        raise ValidationError("--grid-max needs --grid-min")
    if args.nodes is not None and args.nodes < 16:
        raise ValidationError("--nodes must be at least 16")
    return SolveOptions(tol=args.tol, max_iter=args.max_iter, r_min=args.grid_min,
                        r_max=args.grid_max, nodes=args.nodes)


def _parse_k_list(text: str) -> list[float]:
    try:
        ks = [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ValidationError(f"--k-list must be comma-separated numbers, got '{text}'") from None
    if not ks:
        raise ValidationError("--k-list is empty")
    for k in ks:
        _positive("k", k)
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValidationError("--k-list must be strictly increasing")
    return ks


# --- subcommands ------------------------------------------------------------


def cmd_constants(args) -> int:
    params = _params(args)
    ex = derive_exponents(params)
    rep = validate_regime(params)
    path = _report_path(args, "constants.json")
    _write_json(path, {"command": "constants", "params": {"N": params.N, "p": params.p},
                       "exponents": ex.to_dict(), "regime": rep.to_dict()})
    print(path)
    return EXIT_OK


def cmd_profile(args) -> int:
    params = _params(args)
    try:
        prof = shoot_profile(params)
    except RegimeError as exc:
        raise ValidationError(str(exc)) from None
    payload = {"command": "profile", "params": {"N": params.N, "p": params.p},
               "regime": prof.regime.value, "sup_value": prof.sup_value,
               "c_p": prof.exponents.c_p, "crossings": prof.crossings}
    try:
        rates = profile_asymptotics(prof, params)
        payload["rates"] = {"minus_inf": rates.rate_minus_inf, "plus_inf": rates.rate_plus_inf,
                            "d0_residual": rates.d0_residual}
    except ProfileError as exc:
        payload["rates"] = {"error": str(exc)}
    path = _report_path(args, "profile.json")
    csv_path = path.with_suffix(".csv")
    _write_csv(csv_path, {"t": prof.t_grid, "w": prof.values, "dw": prof.derivative})
    payload["profile_csv_path"] = str(csv_path)
    _write_json(path, payload)
    print(path)
    return EXIT_OK


def _solve_payload(params, V, rep) -> dict:
    out = {"params": {"N": params.N, "p": params.p}, "potential": V.to_dict()}
    out.update(rep.summary())
    out["stages"] = rep.stages
    out["grid"] = {"r_min": rep.solution.grid.r_min, "r_max": rep.solution.grid.r_max,
                   "nodes": rep.solution.grid.size}
    return out


def cmd_solve(args) -> int:
    params = _params(args)
    _positive("--k", args.k)
    opts = _solve_options(args)
    V = _potential(args.potential)
    _require_regime(params, V.meta.get("beta") or 0.0)
    try:
        rep = solve(params, V, args.k, opts)
    except RegimeError as exc:
        raise ValidationError(str(exc)) from None
    path = _report_path(args, "report.json")
    csv_path = path.with_suffix(".csv")
    _write_csv(csv_path, {"r": rep.solution.r, "u": rep.solution.values})
    payload = {"command": "solve", **_solve_payload(params, V, rep),
               "solution_csv_path": str(csv_path)}
    _write_json(path, payload)
    print(path)
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


def _sweep_one(task):
    N, p, spec, k, opts = task
    params = ProblemParams(N, p)
    try:
        rep = solve(params, build_potential(spec), k, opts)
    except (RegimeError, MonotonicityError, ValueError, RuntimeError) as exc:
        return {"k": k, "nu": None, "error": str(exc)}
    return {"k": k, "nu": rep.nu if rep.converged else None,
            "error": None if rep.converged else "not converged",
            "iterations": rep.iterations, "barrier_eps": rep.barrier_eps,
            "residual_norm": rep.residual_norm}


def cmd_sweep(args) -> int:
    from .solver import NuPoint

    params = _params(args)
    opts = _solve_options(args)
    V = _potential(args.potential)
    _require_regime(params, V.meta.get("beta") or 0.0)
    ks = _parse_k_list(args.k_list)
    if args.workers < 1:
        raise ValidationError("--workers must be at least 1")
    tasks = [(params.N, params.p, args.potential, k, opts) for k in ks]
    if args.workers == 1:
        rows = [_sweep_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_one, tasks))
    points = [NuPoint(r["k"], r["nu"], r["error"]) for r in rows]
    lip = lipschitz_check(points, V.sign_class())
    path = _report_path(args, "sweep.json")
    _write_json(path, {"command": "sweep", "params": {"N": params.N, "p": params.p},
                       "potential": V.to_dict(), "points": rows, "lipschitz_ok": lip})
    print(path)
    failed = any(r["nu"] is None for r in rows)
    return EXIT_NOT_CONVERGED if failed else EXIT_OK


def cmd_analyze(args) -> int:
    from .asymptotics import fit_decay_exponent

    cols = _read_csv(args.input)
    if "r" not in cols or args.column not in cols:
        raise ValidationError(f"input needs columns r and {args.column}")
    grid = _grid_from_nodes(cols["r"])
    u = RadialFunction.from_values(grid, cols[args.column])
    try:
        fit = fit_decay_exponent(u, args.fit)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    path = _report_path(args, f"fit_{args.fit}.json")
    _write_json(path, {"command": "analyze", "input": args.input, "fit": args.fit,
                       "result": fit.to_dict()})
    print(path)
    return EXIT_OK


def cmd_kelvin(args) -> int:
    from .asymptotics import kelvin_transform, pde_residual

    params = _params(args)
    V = _potential(args.potential)
    cols = _read_csv(args.input)
    if "r" not in cols or "u" not in cols:
        raise ValidationError("input needs columns r and u")
    grid = _grid_from_nodes(cols["r"])
    u = RadialFunction.from_values(grid, cols["u"])
    try:
        pair = kelvin_transform(u, V, params, args.alpha)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    res = pde_residual(pair.u_sharp, pair.V_sharp, params)["norm"]
    path = _report_path(args, "kelvin.json")
    csv_path = path.with_suffix(".csv")
    _write_csv(csv_path, {"r": grid.nodes, "u_sharp": pair.u_sharp.values,
                          "V_sharp": pair.V_sharp.values})
    _write_json(path, {"command": "kelvin", "params": {"N": params.N, "p": params.p},
                       "alpha": args.alpha, "rho": pair.rho, "rho_in_range": -2 < pair.rho < 0,
                       "residual_norm": res, "kelvin_csv_path": str(csv_path)})
    print(path)
    return EXIT_OK


def cmd_check_potential(args) -> int:
    params = _params(args)
    V = _potential(args.potential)
    rep = check_hypotheses(V, params)
    path = _report_path(args, "hypotheses.json")
    _write_json(path, {"command": "check-potential", "params": {"N": params.N, "p": params.p},
                       "report": rep.to_dict()})
    print(path)
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="laneemden",
        description="Fast-decaying singular solutions of -Delta u = V u^p in R^N minus the origin.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_params=True):
        if needs_params:
            p.add_argument("--dim", type=int, required=True, help="dimension N >= 3")
            p.add_argument("--p", type=float, required=True, help="exponent p > 1")
        p.add_argument("--out", help="report path (JSON)")
        p.add_argument("--out-dir", help=f"output directory (default ${OUTDIR_ENV} or .)")

    def solver_flags(p):
        p.add_argument("--potential", default="const1", help='e.g. "bridge:alpha0=0,beta=-1"')
        p.add_argument("--tol", type=float, default=1e-8)
        p.add_argument("--max-iter", type=int, default=200)
        p.add_argument("--grid-min", type=float, help="r_min (default: chosen from k)")
        p.add_argument("--grid-max", type=float, help="r_max (default: 1/r_min)")
        p.add_argument("--nodes", type=int, help="grid nodes (default: 100 per decade)")

    p = sub.add_parser("constants", help="exponents and constants for (N, p)")
    common(p)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("profile", help="shoot the Emden-Fowler profile")
    common(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("solve", help="solve for one seed k")
    common(p)
    p.add_argument("--k", type=float, required=True)
    solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="nu(k) over a list of seeds")
    common(p)
    p.add_argument("--k-list", required=True, help="comma-separated increasing seeds")
    p.add_argument("--workers", type=int, default=1)
    solver_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("analyze", help="fit a decay exponent to a solution CSV")
    common(p, needs_params=False)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--fit", choices=["origin", "infinity", "mid"], required=True)
    p.add_argument("--column", default="u")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("kelvin", help="Kelvin transform of a solution CSV")
    common(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--potential", default="const1")
    p.set_defaults(func=cmd_kelvin)

    p = sub.add_parser("check-potential", help="sample-based hypothesis report for V")
    common(p)
    p.add_argument("--potential", required=True)
    p.set_defaults(func=cmd_check_potential)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            # --help
            return EXIT_OK if not exc.code else EXIT_INVALID
        return args.func(args)
    except ValidationError as exc:
        json.dump({"error": "validation", "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())
