"""Command-line front end: solve one instance, run the benchmark
comparison across solvers, or emit the 2-D trajectory trace.

Outputs are plain CSV/JSON with repr-formatted floats so identical
configurations reproduce byte-identical files (wall-clock columns
aside).
"""

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from aladin_mpcc.baselines import (
    BaselineSchedule,
    run_penalty_barrier_newton,
    run_vanilla_barrier,
)
from aladin_mpcc.coordinator import AladinConfig, SolveStatus, run_aladin_beta
from aladin_mpcc.problem import canonical_reference, load_problem, make_canonical

SOLVER_NAMES = ("aladin_beta", "pb_per_step", "pb_per_barrier", "vanilla")

BENCH_HEADER = ("iter,mu,rho,objective,comp_residual,consensus_residual,"
                "local_eq_residual,step_norm,x_error,inner_iters,wall_time_s")
TRACE_HEADER = "iter,x1,x2,objective,comp_residual"

_INT_FIELDS = {"max_outer", "inner_max_iter", "reg_max_shifts"}
_BOOL_FIELDS = {"fixed_iterations"}
_VECTOR_FIELDS = {"reference_solution"}
_TRUE_WORDS = {"1", "true", "yes", "on"}
_FALSE_WORDS = {"0", "false", "no", "off"}


class SpecError(ValueError):
    """Bad invocation or bad input data; maps to exit code 2."""


def _coerce_set_value(name, text):
    if name in _BOOL_FIELDS:
        lowered = text.strip().lower()
        if lowered in _TRUE_WORDS:
            return True
        if lowered in _FALSE_WORDS:
            return False
        raise SpecError(f"{name} expects a boolean, got {text!r}")
    if name in _INT_FIELDS:
        try:
            return int(text)
        except ValueError:
            raise SpecError(f"{name} expects an integer, got {text!r}") from None
    if name in _VECTOR_FIELDS:
        try:
            return [float(part) for part in text.split(",")]
        except ValueError:
            raise SpecError(f"{name} expects comma-separated floats") from None
    try:
        return float(text)
    except ValueError:
        raise SpecError(f"{name} expects a number, got {text!r}") from None


def _coerce_json_value(name, value):
    if name in _BOOL_FIELDS:
        if not isinstance(value, bool):
            raise SpecError(f"config key {name} expects a boolean")
        return value
    if name in _VECTOR_FIELDS:
        if not isinstance(value, list):
            raise SpecError(f"config key {name} expects a list of numbers")
        return [float(v) for v in value]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(f"config key {name} expects a number")
    if name in _INT_FIELDS:
        if float(value) != int(value):
            raise SpecError(f"config key {name} expects an integer")
        return int(value)
    return float(value)


def build_config(config_path=None, set_pairs=None):
    """AladinConfig from defaults, a JSON config file, then --set pairs."""
    known = set(AladinConfig.field_names())
    mapping = {}
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise SpecError("config file must hold a JSON object")
        for key, value in data.items():
            if key not in known:
                raise SpecError(f"unknown config key in file: {key}")
            mapping[key] = _coerce_json_value(key, value)
    for pair in set_pairs or []:
        key, sep, text = pair.partition("=")
        if not sep:
            raise SpecError(f"--set expects key=value, got {pair!r}")
        key = key.strip()
        if key not in known:
            raise SpecError(f"unknown config key: {key}")
        mapping[key] = _coerce_set_value(key, text)
    try:
        return AladinConfig.from_mapping(mapping)
    except ValueError as exc:
        raise SpecError(str(exc)) from None


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_bench_csv(path, records, x_errors=None):
    """Write iteration records under the frozen bench header.

    x_errors, when given, overrides the per-record x_error column (used
    for the post-hoc distance to the rounded reference pattern).
    """
    lines = [BENCH_HEADER]
    for i, rec in enumerate(records):
        err = rec.x_error
        if x_errors is not None:
            err = x_errors[i]
        cells = [
            str(rec.k),
            _format_cell(rec.mu),
            _format_cell(rec.rho),
            _format_cell(rec.objective),
            _format_cell(rec.comp_residual),
            _format_cell(rec.consensus_residual),
            _format_cell(rec.local_eq_residual),
            _format_cell(rec.step_norm),
            _format_cell(err),
            str(rec.inner_iters),
            _format_cell(rec.wall_time_s),
        ]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_trace_csv(path, x0, oracle, result):
    """Trace CSV: row 0 is the start point, then one row per iteration."""
    lines = [TRACE_HEADER]

    def row(i, x):
        comp = float(np.abs(oracle.eval_g(x)).max())
        return ",".join([str(i), repr(float(x[0])), repr(float(x[1])),
                         repr(oracle.eval_f(x)), repr(comp)])

    lines.append(row(0, np.asarray(x0, dtype=np.float64)))
    for rec, x in zip(result.records, result.x_trace):
        lines.append(row(rec.k, x))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_solver(name, oracle, x0, cfg, record_sink=None):
    if name == "aladin_beta":
        return run_aladin_beta(oracle, x0, cfg, record_sink=record_sink)
    if name == "pb_per_step":
        return run_penalty_barrier_newton(oracle, x0, cfg,
                                          BaselineSchedule.PER_STEP,
                                          record_sink=record_sink)
    if name == "pb_per_barrier":
        return run_penalty_barrier_newton(oracle, x0, cfg,
                                          BaselineSchedule.PER_BARRIER_SOLVE,
                                          record_sink=record_sink)
    if name == "vanilla":
        return run_vanilla_barrier(oracle, x0, cfg, record_sink=record_sink)
    raise SpecError(
        f"unknown solver {name!r}; valid solvers: {', '.join(SOLVER_NAMES)}"
    )


def _load_spec_problem(args):
    if getattr(args, "problem", None) and getattr(args, "pairs", None):
        raise SpecError("--problem and --pairs are mutually exclusive")
    if getattr(args, "problem", None):
        try:
            oracle = load_problem(args.problem)
        except json.JSONDecodeError as exc:
            raise SpecError(
                f"problem file parse error at line {exc.lineno}, "
                f"column {exc.colno}: {exc.msg}"
            ) from None
        except OSError as exc:
            raise SpecError(f"cannot read problem file: {exc}") from None
        except ValueError as exc:
            raise SpecError(str(exc)) from None
        # zero is interior for every bound kind under the default radius
        return oracle, np.zeros(oracle.n)
    pairs = args.pairs if getattr(args, "pairs", None) else 1
    if pairs < 1:
        raise SpecError("--pairs must be at least 1")
    oracle = make_canonical(pairs)
    return oracle, np.ones(oracle.n)


def cmd_solve(args):
    oracle, x0 = _load_spec_problem(args)
    cfg = build_config(args.config, args.set)
    if args.solver not in SOLVER_NAMES:
        raise SpecError(
            f"unknown solver {args.solver!r}; valid solvers: "
            f"{', '.join(SOLVER_NAMES)}"
        )
    t_start = time.perf_counter()
    result = run_solver(args.solver, oracle, x0, cfg)
    wall = time.perf_counter() - t_start
    final_x = result.final_x
    payload = {
        "status": result.status.value,
        "final_x": [float(v) for v in final_x],
        "objective": oracle.eval_f(final_x),
        "comp_residual": float(np.abs(oracle.eval_g(final_x)).max()),
        "iterations": len(result.records),
        "wall_time": wall,
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    if result.message:
        print(result.message, file=sys.stderr)
    return 0 if result.status is SolveStatus.CONVERGED else 1


def cmd_bench(args):
    if args.pairs < 1:
        raise SpecError("--pairs must be at least 1")
    solvers = args.solver or list(SOLVER_NAMES)
    for name in solvers:
        if name not in SOLVER_NAMES:
            raise SpecError(
                f"unknown solver {name!r}; valid solvers: "
                f"{', '.join(SOLVER_NAMES)}"
            )
    cfg = build_config(args.config, args.set)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    oracle = make_canonical(args.pairs)
    x0 = np.ones(oracle.n)
    for name in solvers:
        t_start = time.perf_counter()
        result = run_solver(name, oracle, x0, cfg)
        wall = time.perf_counter() - t_start
        x_errors = None
        if result.x_trace:
            reference = canonical_reference(result.x_trace[-1])
            x_errors = [float(np.linalg.norm(x - reference))
                        for x in result.x_trace]
        csv_path = out_dir / f"{name}.csv"
        write_bench_csv(csv_path, result.records, x_errors)
        note = f" ({result.message})" if result.message else ""
        print(f"{name}: {result.status.value} in {len(result.records)} "
              f"iterations, {wall:.3f}s -> {csv_path}{note}")
    return 0


def cmd_trace(args):
    try:
        parts = [float(v) for v in args.start.split(",")]
    except ValueError:
        raise SpecError("--start expects two comma-separated floats") from None
    if len(parts) != 2:
        raise SpecError("--start expects exactly two coordinates")
    if not all(v > 0.0 for v in parts):
        raise SpecError("--start must be strictly positive")
    cfg = build_config(args.config, args.set)
    if args.iters is not None:
        if args.iters < 1:
            raise SpecError("--iters must be at least 1")
        cfg = cfg.replace(max_outer=args.iters, fixed_iterations=True)
    oracle = make_canonical(1)
    x0 = np.array(parts)
    result = run_aladin_beta(oracle, x0, cfg)
    write_trace_csv(args.out, x0, oracle, result)
    print(f"trace: {result.status.value} in {len(result.records)} "
          f"iterations -> {args.out}")
    if result.message:
        print(result.message, file=sys.stderr)
    hard_failure = result.status in (SolveStatus.INNER_SOLVER_FAILURE,
                                     SolveStatus.LINEAR_SOLVER_SINGULAR,
                                     SolveStatus.DIVERGED)
    if hard_failure:
        return 1
    if result.status is SolveStatus.MAX_ITERATIONS and args.iters is None:
        return 1
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="aladin-mpcc",
        description=("Distributed penalty-barrier solver for complementarity-"
                     "constrained programs, with centralized baselines"),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of config overrides")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one config field (repeatable)")

    p_solve = sub.add_parser("solve", parents=[common],
                             help="solve one instance, write a JSON result")
    p_solve.add_argument("--problem", help="path to a problem JSON file")
    p_solve.add_argument("--pairs", type=int,
                         help="use the built-in pair family with this size")
    p_solve.add_argument("--solver", default="aladin_beta",
                         help=f"one of: {', '.join(SOLVER_NAMES)}")
    p_solve.add_argument("--out", help="result JSON path (default: stdout)")
    p_solve.set_defaults(func=cmd_solve)

    p_bench = sub.add_parser("bench", parents=[common],
                             help="run solvers on the pair family, one CSV each")
    p_bench.add_argument("--pairs", type=int, required=True,
                         help="number of complementary pairs")
    p_bench.add_argument("--solver", action="append",
                         help="solver to include (repeatable; default: all)")
    p_bench.add_argument("--out", default="bench_out",
                         help="output directory for <solver>.csv files")
    p_bench.set_defaults(func=cmd_bench)

    p_trace = sub.add_parser("trace", parents=[common],
                             help="trace the 2-D pair instance iterate path")
    p_trace.add_argument("--start", required=True, metavar="X1,X2",
                         help="strictly positive start point")
    p_trace.add_argument("--iters", type=int,
                         help="run exactly this many iterations")
    p_trace.add_argument("--out", default="trace.csv",
                         help="output CSV path")
    p_trace.set_defaults(func=cmd_trace)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry():
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    entry()
