"""Plan wall time against grid size on random benchmark instances.

    python scripts/bench_scaling.py --sizes 250,500,1000,2000,4000 --repeats 9
"""
import argparse
import statistics
import time

import numpy as np

from speedplan import FIAT_500E, InstanceSpec, Weights, plan, random_feasible


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--sizes", default="250,500,1000,2000,4000")
    ap.add_argument("--repeats", type=int, default=9)
    ap.add_argument("--lam", type=float, default=5e-4)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    weights = Weights(args.lam)
    warm, _ = random_feasible(rng, InstanceSpec(n=100))
    plan(FIAT_500E, warm, weights)

    sizes = [int(s) for s in args.sizes.split(",")]
    medians = {}
    print("n,median_ms,min_ms,max_ms,states_expanded")
    for n in sizes:
        times, states = [], []
        for _ in range(args.repeats):
            grid, _ = random_feasible(rng, InstanceSpec(n=n))
            t0 = time.perf_counter()
            res = plan(FIAT_500E, grid, weights)
            times.append(1e3 * (time.perf_counter() - t0))
            states.append(res.states_expanded)
        medians[n] = statistics.median(times)
        print(f"{n},{medians[n]:.3f},{min(times):.3f},{max(times):.3f},{int(statistics.median(states))}")
    for n in sizes:
        if 4 * n in medians:
            print(f"# t({4 * n})/t({n}) = {medians[4 * n] / medians[n]:.2f}")


if __name__ == "__main__":
    main()
