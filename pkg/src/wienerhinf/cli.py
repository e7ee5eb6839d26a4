"""Command-line front end.

Every invocation prints one JSON object on standard output.  Exit codes:
0 success, 1 usage, I/O or parse error, 2 infeasible or failed assumption,
3 numerical failure.  Logs go to standard error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from .config import DEFAULT
from .errors import HinfError
from .pipeline import AreSolutionSymbol, HinfPlantSymbol, SolveOptions, gamma_bisect, solve_over_circle, verify_assumptions
from .spatial import (
    SinusoidDisturbance,
    WhiteDisturbance,
    simulate_closed_loop,
    spatial_decay_report,
    worst_frequency,
)
from .symbol import LaurentMatrixSymbol, SampleGrid, parse_matrix, symbol_from_json

log = logging.getLogger("wienerhinf")

_FIELDS = ("a", "b", "c", "d1", "d2", "e")


class UsageError(Exception):
    exit_code = 1

    def __init__(self, message, code="UsageError", **context):
        super().__init__(message)
        self.code = code
        self.context = context


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _clean(obj):
    """JSON-safe copy: non-finite floats become null, numpy scalars become builtins."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, complex):
        return [_clean(obj.real), _clean(obj.imag)]
    return obj


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, allow_nan=False)


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}", code="IOError", path=str(path)) from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}", code="ParseError", path=str(path)) from None


def _write_json(path, obj):
    try:
        with open(path, "w") as fh:
            fh.write(_dumps(obj))
            fh.write("\n")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}", code="IOError", path=str(path)) from None


def load_problem(path):
    """Parse a problem file into ``(plant, gamma or None, options dict)``."""
    raw = _read_json(path)
    if not isinstance(raw, dict):
        raise UsageError("problem file must hold a JSON object", code="ParseError")
    kind = raw.get("kind")
    if kind not in ("constant", "symbol"):
        raise UsageError("kind must be 'constant' or 'symbol'", code="ParseError", kind=kind)
    missing = [k for k in _FIELDS if k not in raw]
    if missing:
        raise UsageError(f"missing fields {missing}", code="ParseError")
    try:
        syms = {}
        for k in _FIELDS:
            v = raw[k]
            if kind == "symbol" and isinstance(v, dict):
                syms[k] = symbol_from_json(v, k)
            else:
                syms[k] = LaurentMatrixSymbol.constant(parse_matrix(v, k))
        if kind == "constant" and any(s.bandwidth for s in syms.values()):
            raise ValueError("constant problems cannot carry symbols")
        gamma = raw.get("gamma")
        gamma = None if gamma is None else float(gamma)
        plant = HinfPlantSymbol(**syms, gamma=gamma if gamma is not None else math.inf)
    except (ValueError, TypeError, KeyError) as exc:
        raise UsageError(str(exc), code="ParseError") from None
    dims = raw.get("dims")
    if dims is not None:
        have = {"n": plant.a.rows, "m": plant.b.cols, "p": plant.c.rows, "l": plant.e.cols}
        for key, val in dims.items():
            if key in have and int(val) != have[key]:
                raise UsageError(f"dims.{key}={val} but data give {have[key]}", code="ParseError")
    options = raw.get("options") or {}
    if not isinstance(options, dict):
        raise UsageError("options must be an object", code="ParseError")
    return plant, gamma, options


def _tolerances(options):
    tol = options.get("tolerances") or {}
    try:
        return DEFAULT.with_overrides(**tol)
    except TypeError as exc:
        raise UsageError(f"unknown tolerance: {exc}", code="ParseError") from None


def _solve_options(args, options):
    grid = args.grid if getattr(args, "grid", None) is not None else options.get("grid", 16)
    return SolveOptions(
        grid_start=int(grid),
        max_doublings=int(options.get("max_doublings", 4)),
        tol=_tolerances(options),
        workers=options.get("workers"),
        seed=int(options.get("seed", 0)),
    )


def _gamma(args, file_gamma):
    g = args.gamma if getattr(args, "gamma", None) is not None else file_gamma
    if g is None:
        raise UsageError("gamma is required (flag --gamma or field 'gamma')")
    if not g > 0:
        raise UsageError("gamma must be positive")
    return float(g)


def _solution_summary(sol):
    return {
        "gamma": sol.gamma,
        "grid": sol.grid_used.size,
        "bandwidth": {"p": sol.p.bandwidth, "f": sol.f.bandwidth, "a_cl": sol.a_cl.bandwidth},
        "tail_mass": sol.tail_mass,
        "coefficient_change": sol.coefficient_change,
        "report": sol.report.to_dict(),
    }


def cmd_check(args):
    plant, gamma, options = load_problem(args.file)
    if args.gamma is not None:
        gamma = args.gamma
    if gamma is not None:
        plant = plant.with_gamma(gamma)
    size = args.grid if args.grid is not None else options.get("grid", 16)
    try:
        grid = SampleGrid.covering(plant.bandwidth, minimum=int(size))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    tol = _tolerances(options)
    reports = verify_assumptions(plant, grid, tol, int(options.get("seed", 0)))
    failing = [r.to_dict() for r in reports if not r.passed]
    margins = {}
    for r in reports:
        for k, v in r.margins.items():
            margins[k] = min(margins.get(k, math.inf), v)
    out = {
        "command": "check",
        "passed": not failing,
        "gamma": gamma,
        "grid": grid.size,
        "involution": all(r.involution for r in reports),
        "failing": failing,
        "worst_margins": margins,
        "tolerances_used": reports[0].tolerances_used if reports else {},
    }
    return out, 0 if not failing else 2


def cmd_solve(args):
    plant, gamma, options = load_problem(args.file)
    plant = plant.with_gamma(_gamma(args, gamma))
    sol = solve_over_circle(plant, _solve_options(args, options))
    if args.out:
        _write_json(args.out, sol.to_json())
    out = {"command": "solve", "passed": sol.report.passed, "out": args.out, **_solution_summary(sol)}
    return out, 0 if sol.report.passed else 2


def cmd_gamma_opt(args):
    plant, gamma, options = load_problem(args.file)
    plant = plant.with_gamma(gamma if gamma is not None else args.hi)
    if not (0 < args.lo < args.hi) or not args.tol > 0:
        raise UsageError("need 0 < lo < hi and tol > 0")
    res = gamma_bisect(plant, args.lo, args.hi, args.tol, _solve_options(args, options))
    if args.out:
        _write_json(args.out, res.solution.to_json())
    out = {
        "command": "gamma-opt",
        "gamma_star": res.gamma_star,
        "bracket": [res.lo, res.hi],
        "gamma_feasible": res.gamma_feasible,
        "solution": _solution_summary(res.solution),
        "out": args.out,
    }
    return out, 0


def cmd_simulate(args):
    plant, _, _ = load_problem(args.file)
    raw = _read_json(args.sol)
    try:
        sol = AreSolutionSymbol.from_json(raw)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc), code="ParseError") from None
    plant = plant.with_gamma(sol.gamma)
    if args.cells < 1 or not args.tfinal > 0 or not args.dt > 0:
        raise UsageError("cells, tfinal and dt must be positive")
    if args.disturbance == "white":
        dist = WhiteDisturbance(seed=args.seed, amplitude=args.amplitude)
        drive = {"kind": "white", "seed": args.seed}
    else:
        if args.theta_index is None and args.omega is None:
            j, omega, mag = worst_frequency(plant, sol, args.cells)
        else:
            j = args.theta_index or 0
            omega = args.omega or 0.0
            mag = None
        dist = SinusoidDisturbance(theta_index=j, omega=omega, amplitude=args.amplitude)
        drive = {"kind": "sine", "theta_index": j, "omega": omega, "transfer_magnitude": mag}
    try:
        res = simulate_closed_loop(plant, sol, args.cells, dist, args.tfinal, args.dt)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.trajectory_csv:
        try:
            res.trajectory.to_csv(args.trajectory_csv)
        except OSError as exc:
            raise UsageError(f"cannot write {args.trajectory_csv}: {exc.strerror}", code="IOError") from None
    out = {"command": "simulate", "gamma": sol.gamma, "disturbance": drive, **res.to_dict()}
    out["below_gamma"] = None if math.isnan(res.empirical_gain) else res.empirical_gain < sol.gamma
    return out, 0


def cmd_report(args):
    raw = _read_json(args.sol)
    try:
        sol = AreSolutionSymbol.from_json(raw)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc), code="ParseError") from None
    rep = spatial_decay_report(sol.f)
    if args.decay_csv:
        try:
            rep.to_csv(args.decay_csv)
        except OSError as exc:
            raise UsageError(f"cannot write {args.decay_csv}: {exc.strerror}", code="IOError") from None
    out = {
        "command": "report",
        "gamma": sol.gamma,
        "grid": sol.grid_used.size,
        "decay": rep.to_dict(),
        "decay_csv": args.decay_csv,
        "verification": raw.get("report"),
    }
    return out, 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wienerhinf", description="H-infinity design for spatially invariant plants.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("check", help="check the standing assumptions on a grid")
    p.add_argument("file")
    p.add_argument("--gamma", type=float)
    p.add_argument("--grid", type=int)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("solve", help="solve the Riccati equation over the circle")
    p.add_argument("file")
    p.add_argument("--gamma", type=float)
    p.add_argument("--grid", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gamma-opt", help="bisect for the optimal level")
    p.add_argument("file")
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--grid", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gamma_opt)

    p = sub.add_parser("simulate", help="simulate the closed loop on a ring of cells")
    p.add_argument("file")
    p.add_argument("sol")
    p.add_argument("--cells", type=int, required=True)
    p.add_argument("--tfinal", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--disturbance", choices=("white", "sine"), default="white")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--theta-index", type=int)
    p.add_argument("--omega", type=float)
    p.add_argument("--trajectory-csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("report", help="spatial decay of the gain of a solution")
    p.add_argument("sol")
    p.add_argument("--decay-csv")
    p.set_defaults(func=cmd_report)
    return parser


def run(argv=None) -> tuple[dict, int]:
    """Parse ``argv`` and execute; returns the JSON payload and the exit code."""
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            stream=sys.stderr,
            format="%(levelname)s %(name)s: %(message)s",
        )
        return args.func(args)
    except (HinfError, UsageError) as exc:
        log.debug("error", exc_info=True)
        payload = {"code": exc.code, "message": str(exc), "context": dict(exc.context)}
        return payload, exc.exit_code
    except ValueError as exc:
        log.debug("error", exc_info=True)
        return {"code": "InvalidInput", "message": str(exc), "context": {}}, 1


def main(argv=None) -> int:
    payload, code = run(argv)
    sys.stdout.write(_dumps(payload) + "\n")
    sys.stdout.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
