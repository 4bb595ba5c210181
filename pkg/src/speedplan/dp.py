"""Dynamic program over the four-speed state lattice and profile reconstruction.

States are ``(j, tag)`` pairs where the tag picks one of four candidate speeds
at grid point ``j``: the corridor floor ``y_j``, the corridor ceiling ``z_j``,
and the two cruise speeds ``w_plus`` / ``w_minus``.  A move from a state either
jumps directly to a tagged speed at ``j + 1`` or coasts (zero force) for a
number of steps and then jumps to a tagged speed.  All moves go forward in
``j``, so one ascending pass over a dense ``(n, 4)`` table settles every state.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
from numba import njit

from .feasibility import TOL_FEAS, Bounds, compute_zy
from .model import (
    EPSILON_SPEED,
    AssumptionReport,
    PathGrid,
    SpeedProfile,
    VehicleParams,
    Weights,
    check_assumptions,
    evaluate_objective,
    reference_speeds,
)

log = logging.getLogger("speedplan")


class SpeedTag(IntEnum):
    YMIN = 0
    ZMAX = 1
    WPLUS = 2
    WMINUS = 3


N_TAGS = len(SpeedTag)
NO_PRED = -1


class NoDpPath(RuntimeError):
    """The final state is unreachable in the DP lattice."""


@dataclass(frozen=True)
class PlanOptions:
    epsilon: float = 1e-9
    max_iters: int = 100_000
    tol_feas: float = TOL_FEAS
    epsilon_speed: float = EPSILON_SPEED


@dataclass(frozen=True, eq=False)
class DpTables:
    """Value and predecessor tables indexed by ``(j, tag)``.

    ``pred_j[j, t]`` / ``pred_tag[j, t]`` locate the state a move started
    from; a gap ``j - pred_j > 1`` marks a coasting move.
    """

    V: np.ndarray
    pred_j: np.ndarray
    pred_tag: np.ndarray
    speeds: np.ndarray
    exists: np.ndarray
    states_expanded: int

    @property
    def reachable(self) -> np.ndarray:
        return np.isfinite(self.V)

    @property
    def final_value(self) -> float:
        return float(self.V[-1, SpeedTag.YMIN])


@dataclass(frozen=True, eq=False)
class PlanResult:
    profile: SpeedProfile
    dp_value: float
    states_expanded: int
    wall_time: float
    bounds: Bounds | None = None
    assumptions: AssumptionReport | None = None
    tables: DpTables | None = field(default=None, repr=False)


# --------------------------------------------------------------------------
# state set


def state_speeds(bounds: Bounds, w_plus: float, w_minus: float, tol: float = TOL_FEAS):
    """Candidate speeds and existence mask, both shaped ``(n, 4)``.

    The first and last points carry only the boundary speed (tag ``YMIN``).
    Cruise-speed tags exist only where the speed lies inside the corridor;
    ``WMINUS`` is dropped when it coincides with ``WPLUS``.
    """
    y, z = bounds.y, bounds.z
    n = y.size
    speeds = np.zeros((n, N_TAGS))
    exists = np.zeros((n, N_TAGS), dtype=np.bool_)
    speeds[:, SpeedTag.YMIN] = y
    speeds[:, SpeedTag.ZMAX] = z
    exists[:, SpeedTag.YMIN] = True
    exists[:, SpeedTag.ZMAX] = True
    for tag, w_ref in ((SpeedTag.WPLUS, w_plus), (SpeedTag.WMINUS, w_minus)):
        if math.isfinite(w_ref):
            speeds[:, tag] = w_ref
            exists[:, tag] = (y - tol <= w_ref) & (w_ref <= z + tol)
    if w_plus == w_minus:
        exists[:, SpeedTag.WMINUS] = False
    for j, w_end in ((0, y[0]), (n - 1, y[-1])):
        exists[j, :] = False
        exists[j, SpeedTag.YMIN] = True
        speeds[j, :] = w_end
    return speeds, exists


# --------------------------------------------------------------------------
# kernel


@njit(cache=True)
def _dyn_prog_kernel(speeds, exists, y, z, res, fric, gamma, h, pm, eta_lmg, k_pos, eps_speed, tol):
    n = speeds.shape[0]
    ntag = speeds.shape[1]
    a = 1.0 - h * gamma
    V = np.full((n, ntag), np.inf)
    pj = np.full((n, ntag), -1, dtype=np.int64)
    pt = np.full((n, ntag), -1, dtype=np.int64)
    V[0, 0] = 0.0
    expanded = 0
    for j in range(n - 1):
        for t in range(ntag):
            if not exists[j, t]:
                continue
            v0 = V[j, t]
            if v0 == np.inf:
                continue
            expanded += 1
            wc = speeds[j, t]
            acc = 0.0
            k = j
            while True:
                # wc is the speed at point k; try every tagged target at k + 1
                rw = 1.0 / math.sqrt(2.0 * wc) if wc > 0.0 else np.inf
                ts = rw if wc >= eps_speed else 1.0 / math.sqrt(2.0 * eps_speed)
                acc += eta_lmg * wc + ts
                cap = pm * rw
                if fric[k] < cap:
                    cap = fric[k]
                base = gamma * wc + res[k]
                for tt in range(ntag):
                    if not exists[k + 1, tt]:
                        continue
                    wt = speeds[k + 1, tt]
                    if wt < y[k + 1] - tol or wt > z[k + 1] + tol:
                        continue
                    f = (wt - wc) / h + base
                    if f < -fric[k] - tol or f > cap + tol:
                        continue
                    cost = v0 + (acc + k_pos * (f if f > 0.0 else 0.0))
                    if cost < V[k + 1, tt]:
                        V[k + 1, tt] = cost
                        pj[k + 1, tt] = j
                        pt[k + 1, tt] = t
                k += 1
                if k >= n - 1:
                    break
                wc = a * wc - h * res[k - 1]
                if wc < 0.0 or wc < y[k] - tol or wc > z[k] + tol:
                    break
    return V, pj, pt, expanded


def dyn_prog(
    bounds: Bounds,
    params: VehicleParams,
    grid: PathGrid,
    weights: Weights,
    tol: float = TOL_FEAS,
    epsilon_speed: float = EPSILON_SPEED,
) -> DpTables:
    """Fill the value/predecessor tables in one ascending sweep over ``j``."""
    w_plus, w_minus = reference_speeds(params, weights)
    speeds, exists = state_speeds(bounds, w_plus, w_minus, tol)
    lam_m = weights.lam * params.M
    V, pj, pt, expanded = _dyn_prog_kernel(
        speeds,
        exists,
        np.ascontiguousarray(bounds.y),
        np.ascontiguousarray(bounds.z),
        np.ascontiguousarray(grid.resistance(params)),
        np.ascontiguousarray(grid.friction_cap(params)),
        params.gamma,
        grid.h,
        params.p_over_m,
        params.eta * lam_m * params.gamma,
        (1.0 - params.eta) * lam_m,
        epsilon_speed,
        tol,
    )
    return DpTables(V=V, pred_j=pj, pred_tag=pt, speeds=speeds, exists=exists, states_expanded=int(expanded))


def build_solution(
    tables: DpTables,
    bounds: Bounds,
    params: VehicleParams,
    grid: PathGrid,
    weights: Weights | None = None,
    epsilon_speed: float = EPSILON_SPEED,
) -> PlanResult:
    """Walk the predecessor chain back from the final state and replay coasting runs."""
    n = grid.n
    if not math.isfinite(tables.final_value):
        raise NoDpPath("final state unreachable")
    a = 1.0 - grid.h * params.gamma
    res = grid.resistance(params)
    w = np.empty(n)
    w[-1] = grid.w_fin
    j, t = n - 1, int(SpeedTag.YMIN)
    while j != 0:
        pj, pt = int(tables.pred_j[j, t]), int(tables.pred_tag[j, t])
        if pj < 0 or pj >= j:
            raise AssertionError(f"broken predecessor chain at state ({j}, {t})")
        wc = tables.speeds[pj, pt]
        w[pj] = wc
        # same recurrence and operation order as the kernel, so the replay is bit-identical
        for k in range(pj + 1, j):
            wc = a * wc - grid.h * res[k - 1]
            w[k] = wc
        j, t = pj, pt
    profile = evaluate_objective(w, params, grid, weights or Weights(0.0), epsilon_speed)
    return PlanResult(
        profile=profile,
        dp_value=tables.final_value,
        states_expanded=tables.states_expanded,
        wall_time=0.0,
        bounds=bounds,
        tables=tables,
    )


def plan(
    params: VehicleParams,
    grid: PathGrid,
    weights: Weights,
    options: PlanOptions | None = None,
) -> PlanResult:
    """Bounds, DP and reconstruction in one call.

    Raises :class:`~speedplan.feasibility.Infeasible` for an empty feasible
    set and :class:`NoDpPath` if the lattice misses the final state.
    Assumption failures are logged, not raised.
    """
    opts = options or PlanOptions()
    t0 = time.perf_counter()
    bounds = compute_zy(params, grid, epsilon=opts.epsilon, max_iters=opts.max_iters, tol_feas=opts.tol_feas)
    report = check_assumptions(params, grid, weights, bounds_z=bounds.z)
    for msg in report.failures():
        log.warning("assumption check: %s", msg)
    tables = dyn_prog(bounds, params, grid, weights, tol=opts.tol_feas, epsilon_speed=opts.epsilon_speed)
    if not math.isfinite(tables.final_value):
        log.error("no DP path on a feasible instance (n=%d, lambda=%g)", grid.n, weights.lam)
        raise NoDpPath("final state unreachable in the DP lattice")
    res = build_solution(tables, bounds, params, grid, weights, opts.epsilon_speed)
    wall = time.perf_counter() - t0
    return PlanResult(
        profile=res.profile,
        dp_value=res.dp_value,
        states_expanded=res.states_expanded,
        wall_time=wall,
        bounds=bounds,
        assumptions=report,
        tables=tables,
    )


# --------------------------------------------------------------------------
# scalar reference implementations (used by tests and the graph oracle)


def _step_force(w_j, w_next, j, params, grid):
    return (w_next - w_j) / grid.h + params.gamma * w_j + float(grid.resistance(params)[j])


def in_gamma(w_j: float, w_next: float, j: int, bounds: Bounds, params: VehicleParams, grid: PathGrid,
             tol: float = TOL_FEAS) -> bool:
    """Whether ``w_next`` is a feasible successor of ``w_j`` across step ``j``."""
    if not 0 <= j < grid.n - 1:
        raise IndexError(f"step index {j} outside [0, {grid.n - 2}]")
    if not bounds.y[j + 1] - tol <= w_next <= bounds.z[j + 1] + tol:
        return False
    f = _step_force(w_j, w_next, j, params, grid)
    fric = params.g * params.mu * math.cos(grid.alpha[j])
    cap = params.p_over_m / math.sqrt(2.0 * w_j) if w_j > 0 else math.inf
    return -fric - tol <= f <= min(fric, cap) + tol


def null_force_curve(j: int, w_j: float, params: VehicleParams, grid: PathGrid) -> np.ndarray:
    """Speeds reached from ``w_j`` at point ``j`` with zero force, stopping before the first negative value."""
    if not 0 <= j < grid.n:
        raise IndexError(f"point index {j} outside [0, {grid.n - 1}]")
    if w_j < 0:
        raise ValueError("w_j must be non-negative")
    a = 1.0 - grid.h * params.gamma
    res = grid.resistance(params)
    out = [float(w_j)]
    wc = float(w_j)
    for k in range(j + 1, grid.n):
        wc = a * wc - grid.h * float(res[k - 1])
        if wc < 0:
            break
        out.append(wc)
    return np.array(out)


def eta_index(j: int, w_j: float, bounds: Bounds, params: VehicleParams, grid: PathGrid,
              tol: float = TOL_FEAS) -> int:
    """Number of coasting steps from ``(j, w_j)`` that stay inside the corridor.

    Counts only points that still have an outgoing step, i.e. up to ``n - 2``.
    """
    if not 0 <= j < grid.n - 1:
        raise IndexError(f"step index {j} outside [0, {grid.n - 2}]")
    curve = null_force_curve(j, w_j, params, grid)
    count = 0
    for i in range(1, min(curve.size, grid.n - 1 - j)):
        k = j + i
        if not bounds.y[k] - tol <= curve[i] <= bounds.z[k] + tol:
            break
        count = i
    return count


def index_sets(j: int, w_j: float, bounds: Bounds, w_plus: float, w_minus: float, params: VehicleParams,
               grid: PathGrid, tol: float = TOL_FEAS) -> tuple[list[int], list[int], list[int], list[int]]:
    """Coasting lengths ``i`` after which a single step reaches ``z``, ``y``, ``w_plus`` or ``w_minus``."""
    eta = eta_index(j, w_j, bounds, params, grid, tol)
    curve = null_force_curve(j, w_j, params, grid)
    sets: tuple[list[int], ...] = ([], [], [], [])
    for i in range(1, eta + 1):
        k = j + i
        targets = (bounds.z[k + 1], bounds.y[k + 1], w_plus, w_minus)
        for r, target in enumerate(targets):
            if math.isfinite(target) and in_gamma(curve[i], target, k, bounds, params, grid, tol):
                sets[r].append(i)
    return sets  # type: ignore[return-value]

