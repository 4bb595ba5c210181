"""Time/energy front for a scenario file or the built-in 400 m synthetic track.

    python scripts/pareto_sweep.py --out front.csv
    python scripts/pareto_sweep.py --scenario scenarios/rolling_hills.yaml --samples 25
"""
import argparse
import sys

from speedplan import (
    DEFAULT_LAMBDA,
    FIAT_500E,
    dominance_filter,
    emit_pareto,
    is_interior,
    load_scenario_file,
    resample,
    solve_point,
    sweep,
    synthetic_track,
    tradeoff_violations,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--scenario", default=None, help="YAML scenario; default is the synthetic track")
    ap.add_argument("--lambda-min", type=float, default=1e-6)
    ap.add_argument("--lambda-max", type=float, default=1.0)
    ap.add_argument("--samples", type=int, default=45)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    if args.scenario:
        params, grid, _ = resample(load_scenario_file(args.scenario))
    else:
        params, grid = FIAT_500E, synthetic_track()
    front = sweep(params, grid, args.lambda_min, args.lambda_max, args.samples)
    text = emit_pareto(front, "csv")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)

    kept = dominance_filter(front.points)
    knee = solve_point(params, grid, DEFAULT_LAMBDA)
    print(f"# {len(front.feasible)}/{len(front)} weights solved, {len(kept)} non-dominated", file=sys.stderr)
    print(f"# trade-off violations: {len(tradeoff_violations(front))}", file=sys.stderr)
    print(
        f"# lambda={DEFAULT_LAMBDA:g}: time {knee.travel_time:.3f} s, "
        f"{knee.specific_energy:.2f} J/kg, interior={is_interior(knee, front.points)}",
        file=sys.stderr,
    )


if __name__ == "__main__":
    main()
