"""Command-line entry point: ``eqp solve | bench | verify | generate``.

Exit codes: 0 success, 1 bad input, 2 solver failure, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .bench import ExampleSpec, generate_instance, read_instance, run_benchmark, write_instance, write_report
from .errors import DenominatorNonPositive, EqpError, InstanceFormatError, NonFiniteIterate
from .solver import SolverConfig, StepSchedule, default_start, solve, write_trajectory
from .verify.audits import (
    audit_line,
    err3_details,
    fejer_audit,
    grid_solution_check,
    star_definition_audit,
)

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3

FEJER_TOL = 1e-9
STAR_TOL = 1e-10
ERR3_FLOOR = -1e-9


def _solver_options(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("solver")
    g.add_argument("--alpha0", type=float, default=100.0, help="step size numerator, alpha_k = alpha0/(k+1)")
    g.add_argument("--lambda", dest="lam", type=float, default=0.5, help="constant relaxation in (0, 1)")
    g.add_argument("--max-iter", type=int, default=1000)
    g.add_argument("--tol-err1", type=float, default=1e-4)
    g.add_argument("--tol-err2", type=float, default=1e-1)
    g.add_argument("--backend", choices=("auto", "numba", "numpy"), default="auto")


def _config(args: argparse.Namespace, history: bool = False) -> SolverConfig:
    return SolverConfig(
        schedule=StepSchedule(alpha0=args.alpha0, lam=args.lam),
        max_iter=args.max_iter,
        tol_err1=args.tol_err1,
        tol_err2=args.tol_err2,
        record_history=history,
    )


def _read_x0(path: str | None, dim: int) -> np.ndarray | None:
    if path is None:
        return None
    try:
        values = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    x0 = np.array(values, dtype=np.float64)
    if x0.shape != (dim,):
        raise InstanceFormatError(f"{path}: x0 must be a list of {dim} numbers")
    return x0


def cmd_solve(args: argparse.Namespace) -> int:
    inst = read_instance(args.instance)
    x0 = _read_x0(args.x0, inst.problem.dim)
    out = solve(inst.problem, inst.sets, x0, _config(args, history=args.history is not None), args.backend)
    print(f"status      {out.status.value}")
    print(f"iterations  {out.iterations}")
    print(f"err1        {out.err1:.6e}")
    print(f"err2        {out.err2:.6e}")
    print(f"time_s      {out.elapsed_seconds:.6f}  ({out.backend})")
    print("x_final     " + " ".join(f"{v:.10g}" for v in out.x_final))
    if args.history is not None:
        write_trajectory(out.history, args.history)
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = _config(args)
    reports = []
    for dim in args.dim:
        r = run_benchmark(ExampleSpec(args.example, dim, args.seed), args.count, cfg, args.threads, args.backend)
        reports.append(r)
        err3 = "" if r.mean_err3 is None else f"  err3={r.mean_err3:.6f}"
        print(
            f"example {r.example_id} n={r.dim:<3d} count={r.problem_count} "
            f"time={r.mean_elapsed_seconds:.4f}s err1={r.mean_err1:.6f} err2={r.mean_err2:.6f}{err3} "
            f"solved={r.solved_fraction:.2f} failures={r.failure_count}"
        )
    write_report(reports, args.out)
    return EXIT_SOLVER if any(r.failure_count for r in reports) else EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    spec = ExampleSpec(args.example, args.dim, args.seed)
    p, s = generate_instance(spec, args.index)
    meta = {"example": args.example, "dim": args.dim, "seed": args.seed, "index": args.index}
    write_instance(args.out, p, s, meta)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    inst = read_instance(args.instance)
    p, s = inst.problem, inst.sets
    x0 = _read_x0(args.x0, p.dim)
    fejer = star = err3 = math.nan
    if args.mode == "star":
        point = default_start(s) if x0 is None else x0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res = star_definition_audit(p, point, samples=args.samples, seed=args.seed)
        star = res.worst_inner
        ok = star < STAR_TOL
        print(f"star-subgradient audit: {res.kept} level-set samples, worst <g, y - x> = {star:.3e}")
        print(f"  sampled Lipschitz estimate {res.lipschitz_estimate:.4g}, Lipschitz gap {res.lipschitz_gap:.3e} (advisory)")
    else:
        out = solve(p, s, x0, _config(args, history=args.mode == "fejer"), args.backend)
        print(f"solve: {out.status.value} after {out.iterations} iterations")
        if args.mode == "fejer":
            fejer = fejer_audit(out.history, s, z_samples=args.samples, seed=args.seed)
            ok = fejer <= FEJER_TOL
            print(f"fejer audit over {len(out.history)} iterations: max violation {fejer:.3e}")
        elif args.mode == "err3":
            res = err3_details(p, out.x_final, s)
            err3 = res.value
            ok = err3 >= ERR3_FLOOR
            kind = "relative" if res.relative else "absolute"
            print(f"err3 ({kind}) = {err3:.6e}")
        else:
            min_f = grid_solution_check(p, s, out.x_final, args.resolution)
            ok = min_f >= -args.tol
            print(f"grid check at resolution {args.resolution}: min f(x, y) = {min_f:.6e} (tolerance {args.tol})")
    print(audit_line(fejer, star, err3))
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eqp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--x0", help="JSON list with the starting point")
    p.add_argument("--history", help="write the trajectory CSV here")
    _solver_options(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="reproduce a benchmark table")
    p.add_argument("--example", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--dim", type=int, nargs="+", required=True)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=None, help="defaults to EQP_THREADS or all cores")
    _solver_options(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("verify", help="audit a solve of one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--mode", choices=("fejer", "star", "err3", "grid"), required=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x0", help="JSON list with the starting point")
    p.add_argument("--resolution", type=float, default=0.01, help="grid spacing (grid mode)")
    p.add_argument("--tol", type=float, default=0.05, help="allowed negativity of min f (grid mode)")
    _solver_options(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("generate", help="write a random benchmark instance file")
    p.add_argument("--example", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InstanceFormatError, OSError) as exc:
        print(f"eqp: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except EqpError as exc:
        print(f"eqp: {exc}", file=sys.stderr)
        solver_side = isinstance(exc, (DenominatorNonPositive, NonFiniteIterate))
        return EXIT_VERIFY if args.command == "verify" and not solver_side else EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
