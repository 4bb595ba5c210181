"""Time/energy trade-off fronts from a sweep over the energy weight."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .dp import NoDpPath, PlanOptions, plan
from .feasibility import ConvergenceError, Infeasible
from .model import PathGrid, VehicleParams, Weights

log = logging.getLogger("speedplan")

#: Energy weight used as the default operating point (s/J).
DEFAULT_LAMBDA = 5e-4


@dataclass(frozen=True)
class ParetoPoint:
    lam: float
    travel_time: float
    energy: float
    specific_energy: float
    objective: float
    feasible: bool
    status: str = "ok"


@dataclass(frozen=True)
class ParetoFront:
    points: tuple[ParetoPoint, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(sorted(self.points, key=lambda p: p.lam)))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def feasible(self) -> tuple[ParetoPoint, ...]:
        return tuple(p for p in self.points if p.feasible)


def _failed(lam: float, status: str) -> ParetoPoint:
    nan = math.nan
    return ParetoPoint(lam, nan, nan, nan, nan, False, status)


def solve_point(params: VehicleParams, grid: PathGrid, lam: float, options: PlanOptions | None = None) -> ParetoPoint:
    try:
        r = plan(params, grid, Weights(lam), options)
    except Infeasible:
        return _failed(lam, "infeasible")
    except NoDpPath:
        return _failed(lam, "no_dp_path")
    except ConvergenceError:
        return _failed(lam, "no_convergence")
    p = r.profile
    return ParetoPoint(lam, p.travel_time, p.energy, p.energy / params.M, p.objective, True)


def lambda_grid(lambda_min: float, lambda_max: float, samples: int, log_spaced: bool = True,
                include_zero: bool = True) -> np.ndarray:
    if not 0 <= lambda_min < lambda_max:
        raise ValueError("need 0 <= lambda_min < lambda_max")
    if samples < 2:
        raise ValueError("samples must be at least 2")
    if log_spaced:
        if lambda_min <= 0:
            raise ValueError("log spacing needs lambda_min > 0; zero is prepended separately")
        lams = np.logspace(math.log10(lambda_min), math.log10(lambda_max), samples)
    else:
        lams = np.linspace(lambda_min, lambda_max, samples)
    if include_zero and lams[0] > 0:
        lams = np.concatenate([[0.0], lams])
    return lams


def sweep(
    params: VehicleParams,
    grid: PathGrid,
    lambda_min: float = 1e-6,
    lambda_max: float = 1.0,
    samples: int = 45,
    log_spaced: bool = True,
    include_zero: bool = True,
    options: PlanOptions | None = None,
) -> ParetoFront:
    """One plan per weight; failed weights stay in the front flagged ``feasible=False``."""
    pts = []
    for lam in lambda_grid(lambda_min, lambda_max, samples, log_spaced, include_zero):
        pt = solve_point(params, grid, float(lam), options)
        if not pt.feasible:
            log.warning("lambda=%g: %s", lam, pt.status)
        pts.append(pt)
    return ParetoFront(tuple(pts))


def dominates(q: ParetoPoint, p: ParetoPoint) -> bool:
    return (
        q.travel_time <= p.travel_time
        and q.energy <= p.energy
        and (q.travel_time < p.travel_time or q.energy < p.energy)
    )


def dominance_filter(points) -> list[ParetoPoint]:
    """Feasible points not dominated by any other; of identical points the first is kept."""
    cand = [p for p in points if p.feasible]
    out: list[ParetoPoint] = []
    seen = set()
    for p in cand:
        key = (p.travel_time, p.energy)
        if key in seen or any(dominates(q, p) for q in cand):
            continue
        seen.add(key)
        out.append(p)
    return out


def tradeoff_violations(front: ParetoFront | list[ParetoPoint], rel_tol: float = 1e-2) -> list[tuple[float, float, str, float]]:
    """Pairs of feasible points whose ordering breaks the scalarization exchange bounds.

    If both solutions are optimal up to ``rel_tol * |objective|``, then for
    ``lam_a < lam_b``::

        E_b - E_a <= (eps_a + eps_b) / (lam_b - lam_a)
        t_a - t_b <= lam_a * (eps_a + eps_b) / (lam_b - lam_a) + eps_a

    Returns ``(lam_a, lam_b, quantity, excess)`` for every violated bound.
    """
    pts = sorted((p for p in (front.points if isinstance(front, ParetoFront) else front) if p.feasible),
                 key=lambda p: p.lam)
    out = []
    for i, a in enumerate(pts):
        for b in pts[i + 1 :]:
            dl = b.lam - a.lam
            if dl <= 0:
                continue
            ea, eb = rel_tol * abs(a.objective), rel_tol * abs(b.objective)
            e_tol = (ea + eb) / dl
            excess = (b.energy - a.energy) - e_tol
            if excess > 0:
                out.append((a.lam, b.lam, "energy", excess))
            excess = (a.travel_time - b.travel_time) - (a.lam * e_tol + ea)
            if excess > 0:
                out.append((a.lam, b.lam, "time", excess))
    return out


def is_interior(point: ParetoPoint, front_points) -> bool:
    """Whether the filtered front has points on both sides of ``point`` in travel time."""
    kept = dominance_filter([*front_points, point])
    if point not in kept:
        return False
    return any(p.travel_time < point.travel_time for p in kept) and any(
        p.travel_time > point.travel_time for p in kept
    )
