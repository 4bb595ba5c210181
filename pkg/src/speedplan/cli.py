"""Command-line entry point.

Exit codes: 0 success, 1 usage or scenario error, 2 infeasible instance,
3 oracle gap above ``--max-gap``, 4 no DP path, 5 bound tightening did not
converge.  ``SPEEDPLAN_LOG_LEVEL`` sets the log level (default WARNING).
"""
from __future__ import annotations

import argparse
import logging
import os
import statistics
import sys
import time
from dataclasses import replace

import numpy as np

from .dp import NoDpPath, plan
from .feasibility import ConvergenceError, Infeasible, compute_zy
from .instances import InstanceSpec, random_feasible
from .model import FIAT_500E, Weights, check_assumptions
from .oracle import solve_grid
from .pareto import lambda_grid, sweep
from .scenario import (
    ScenarioError,
    bundle_from_plan,
    emit_pareto,
    emit_result,
    load_scenario_file,
    resample,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_GAP = 3
EXIT_NO_PATH = 4
EXIT_NO_CONVERGENCE = 5

log = logging.getLogger("speedplan")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _g(x) -> str:
    return f"{x:.9g}"


def _write(text: str, out: str | None):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load(args):
    sc = load_scenario_file(args.scenario)
    params, grid, _ = resample(sc)
    lam = sc.weights.lam if getattr(args, "lam", None) is None else args.lam
    if lam < 0:
        raise ScenarioError("--lambda must be non-negative")
    return sc, params, grid, Weights(lam)


def _report_assumptions(report, out):
    status = "holds" if report.all_hold else "violated"
    print(f"assumptions: {status}", file=out)
    m = report.margins
    print(f"  step-size monotonicity min margin: {_g(float(np.min(m['a1'])))}", file=out)
    print(f"  cond1 margin: {_g(m['cond1'])}", file=out)
    print(f"  asscomb value (holds when < 0): {_g(m['asscomb'])}", file=out)
    for msg in report.failures():
        print(f"  warning: {msg}", file=out)


def cmd_check(args) -> int:
    sc, params, grid, weights = _load(args)
    try:
        bounds = compute_zy(params, grid, epsilon=sc.options.epsilon, max_iters=sc.options.max_iters,
                            tol_feas=sc.options.tol_feas)
    except Infeasible as exc:
        print(f"infeasible: y exceeds z by {_g(exc.amount)} m^2/s^2 at point {exc.index}")
        _report_assumptions(check_assumptions(params, grid, weights), sys.stdout)
        return EXIT_INFEASIBLE
    print(f"feasible: n={grid.n}, bound iterations={bounds.iterations}")
    _report_assumptions(check_assumptions(params, grid, weights, bounds_z=bounds.z), sys.stdout)
    return EXIT_OK


def cmd_plan(args) -> int:
    sc, params, grid, weights = _load(args)
    result = plan(params, grid, weights, sc.options)
    bundle = bundle_from_plan(result, params, grid, s0=float(sc.s[0]), lam=weights.lam)
    _write(emit_result(bundle, args.format), args.out)
    p = result.profile
    print(
        f"objective {_g(p.objective)} s, time {_g(p.travel_time)} s, energy {_g(p.energy)} J, "
        f"{_g(result.wall_time * 1e3)} ms",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_pareto(args) -> int:
    sc, params, grid, _ = _load(args)
    try:
        lambda_grid(args.lambda_min, args.lambda_max, args.samples, args.log, args.zero)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    front = sweep(params, grid, args.lambda_min, args.lambda_max, args.samples, args.log,
                  include_zero=args.zero, options=sc.options)
    _write(emit_pareto(front, args.format), args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    sc, params, grid, weights = _load(args)
    result = plan(params, grid, weights, sc.options)
    cfg = sc.oracle
    overrides = {"levels_per_step": args.levels, "refine_rounds": args.rounds}
    try:
        cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    orc = solve_grid(result.bounds, params, grid, weights, cfg, sc.options.epsilon_speed)
    gap = (result.profile.objective - orc.objective) / abs(orc.objective)
    print(f"dp_objective {_g(result.profile.objective)}")
    print(f"oracle_objective {_g(orc.objective)}")
    print(f"oracle_grid_gap_estimate {_g(orc.grid_gap_estimate)}")
    print(f"relative_gap {_g(gap)}")
    return EXIT_GAP if gap > args.max_gap else EXIT_OK


def cmd_bench(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",")]
    except ValueError:
        raise ScenarioError(f"--sizes must be comma-separated integers, got {args.sizes!r}") from None
    if any(n < 2 for n in sizes):
        raise ScenarioError("--sizes entries must be at least 2")
    rng = np.random.default_rng(args.seed)
    weights = Weights(args.lam if args.lam is not None else 5e-4)
    warm, _ = random_feasible(rng, InstanceSpec(n=50))
    plan(FIAT_500E, warm, weights)
    print("n,median_ms,min_ms,max_ms")
    for n in sizes:
        times = []
        for _ in range(args.repeats):
            grid, _ = random_feasible(rng, InstanceSpec(n=n))
            t0 = time.perf_counter()
            plan(FIAT_500E, grid, weights)
            times.append((time.perf_counter() - t0) * 1e3)
        print(f"{n},{_g(statistics.median(times))},{_g(min(times))},{_g(max(times))}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="speedplan", description="Time/energy speed planning along a fixed path.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_args(p):
        p.add_argument("--scenario", required=True, help="YAML scenario document")
        p.add_argument("--lambda", dest="lam", type=float, default=None, help="energy weight (s/J), overrides the scenario")

    p = sub.add_parser("check", help="feasibility verdict and assumption report")
    scenario_args(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("plan", help="plan a speed profile")
    scenario_args(p)
    p.add_argument("--out", default=None, help="output file (default stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("pareto", help="sweep the energy weight")
    p.add_argument("--scenario", required=True)
    p.add_argument("--lambda-min", type=float, default=1e-6)
    p.add_argument("--lambda-max", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=45)
    p.add_argument("--log", action=argparse.BooleanOptionalAction, default=True, help="log-spaced weights")
    p.add_argument("--zero", action=argparse.BooleanOptionalAction, default=True, help="prepend lambda = 0")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("compare-oracle", help="DP objective against the grid oracle")
    scenario_args(p)
    p.add_argument("--levels", type=int, default=None)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--max-gap", type=float, default=1e-2)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="plan time against grid size on random instances")
    p.add_argument("--sizes", default="500,1000,2000")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    level = os.environ.get("SPEEDPLAN_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Infeasible as exc:
        print(f"infeasible: y exceeds z by {_g(exc.amount)} m^2/s^2 at point {exc.index}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NoDpPath as exc:
        print(f"no DP path: {exc}", file=sys.stderr)
        return EXIT_NO_PATH
    except ConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except BrokenPipeError:
        # downstream closed early (e.g. `| head`); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
