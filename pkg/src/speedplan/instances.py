"""Random benchmark instances with piecewise-constant slope and speed limit.

Distribution: segments of 10 to 50 steps; slope uniform in [-0.1, 0.1] rad
per segment; speed limit uniform in [8, 36] m/s per segment; boundary speeds
uniform in [0, limit] at each end; h = 0.2 m.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .feasibility import Bounds, Infeasible, compute_zy
from .model import FIAT_500E, PathGrid, VehicleParams


@dataclass(frozen=True)
class InstanceSpec:
    n: int = 2000
    h: float = 0.2
    segment_steps: tuple[int, int] = (10, 50)
    alpha_range: tuple[float, float] = (-0.1, 0.1)
    v_range: tuple[float, float] = (8.0, 36.0)
    rest_to_rest: bool = False


def random_grid(rng: np.random.Generator, spec: InstanceSpec = InstanceSpec()) -> PathGrid:
    n = spec.n
    alpha = np.empty(n - 1)
    v_max = np.empty(n)
    k = 0
    lo, hi = spec.segment_steps
    while k < n:
        length = int(rng.integers(lo, hi + 1))
        alpha[k : k + length] = rng.uniform(*spec.alpha_range)
        v_max[k : k + length] = rng.uniform(*spec.v_range)
        k += length
    w_max = 0.5 * v_max**2
    if spec.rest_to_rest:
        w_in = w_fin = 0.0
    else:
        w_in = 0.5 * rng.uniform(0.0, v_max[0]) ** 2
        w_fin = 0.5 * rng.uniform(0.0, v_max[-1]) ** 2
    return PathGrid(spec.h, alpha, w_max, w_in, w_fin)


def random_feasible(
    rng: np.random.Generator,
    spec: InstanceSpec = InstanceSpec(),
    params: VehicleParams = FIAT_500E,
    max_tries: int = 1000,
) -> tuple[PathGrid, Bounds]:
    """Redraw until the bound tightening certifies a non-empty feasible set."""
    for _ in range(max_tries):
        grid = random_grid(rng, spec)
        try:
            return grid, compute_zy(params, grid)
        except Infeasible:
            continue
    raise RuntimeError(f"no feasible instance in {max_tries} draws")


def synthetic_track(n: int = 2000, h: float = 0.2, seed: int = 7) -> PathGrid:
    """Deterministic rest-to-rest track of about 400 m for front sweeps."""
    return random_grid(np.random.default_rng(seed), InstanceSpec(n=n, h=h, rest_to_rest=True))
