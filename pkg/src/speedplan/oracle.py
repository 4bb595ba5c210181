"""Independent reference solvers used to validate the planner.

``solve_grid`` is a dense speed-grid dynamic program over the corridor
``[y, z]``.  Its levels sit on a lattice aligned with coasting: the levels at
point ``k`` are ``o_k + s_k * m * delta`` where ``o`` is the zero-force curve
from ``w_in`` and ``s_k = (1 - h*gamma)**k``.  Holding the integer ``m`` fixed
is an exact zero-force move and changing it by ``dm`` applies force
``s_{k+1} * dm * delta / h``, so refined rounds (``delta`` halved) nest the
previous levels and the objective cannot increase.  The corridor ends and
the cruise speeds are always added as extra levels, and from round 1 on the
zero-force continuations of off-lattice incumbent points are added too.

Each stage is solved exactly over its candidate set.  The cost is piecewise
linear in the target speed within the traction and braking branches and the
feasible origins form an interval with monotone ends, so two monotone queues
give the stage minimum in linear time.

``grid_reachable`` decides feasibility without the corridor by forward
reachability on a fine coasting-aligned integer lattice.  ``graph_search_value``
rebuilds the planner's state graph from scalar primitives and runs Dijkstra.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from numba import njit

from .dp import in_gamma, index_sets
from .feasibility import TOL_FEAS, Bounds, is_feasible_profile
from .model import (
    EPSILON_SPEED,
    PathGrid,
    SpeedProfile,
    VehicleParams,
    Weights,
    check_assumptions,
    critical_speeds,
    evaluate_objective,
    reference_speeds,
)


@dataclass(frozen=True)
class OracleConfig:
    """``relaxed`` drops the force and power constraints and keeps only the corridor box."""

    levels_per_step: int = 400
    refine_rounds: int = 2
    relaxed: bool = False
    tol: float = TOL_FEAS

    def __post_init__(self):
        if self.levels_per_step < 2:
            raise ValueError("levels_per_step must be at least 2")
        if self.refine_rounds < 0:
            raise ValueError("refine_rounds must be non-negative")


@dataclass(frozen=True, eq=False)
class OracleResult:
    profile: SpeedProfile
    objective: float
    grid_gap_estimate: float
    round_objectives: tuple[float, ...]
    spacing: float
    force_quantum: float
    levels: list[np.ndarray] = field(repr=False, default_factory=list)


class OracleNoPath(RuntimeError):
    pass


# --------------------------------------------------------------------------
# lattice geometry


def _lattice_frame(params: VehicleParams, grid: PathGrid):
    a = 1.0 - grid.h * params.gamma
    res = grid.resistance(params)
    n = grid.n
    scale = a ** np.arange(n)
    offset = np.empty(n)
    offset[0] = grid.w_in
    for k in range(n - 1):
        offset[k + 1] = a * offset[k] - grid.h * res[k]
    return offset, scale


def _level_set(k, lo, hi, offset, scale, delta, m_window=None, extra=()):
    unit = scale[k] * delta
    m_lo = math.ceil((lo - offset[k]) / unit)
    m_hi = math.floor((hi - offset[k]) / unit)
    if m_window is not None:
        m_lo = max(m_lo, m_window[0])
        m_hi = min(m_hi, m_window[1])
    pts = offset[k] + unit * np.arange(m_lo, m_hi + 1, dtype=float) if m_hi >= m_lo else np.empty(0)
    pts = pts[(pts >= lo) & (pts <= hi)]
    return np.unique(np.concatenate([pts, np.asarray(extra, dtype=float)]))


def _coast_extras(seeds, offset, scale, y, z, tol):
    """Zero-force continuations of ``(j, w)`` seeds, clipped at the first corridor exit.

    Returns ``(k, w)`` arrays of extra levels.
    """
    ks, ws = [np.empty(0, dtype=np.int64)], [np.empty(0)]
    for j, w in seeds:
        curve = offset[j + 1 :] + scale[j + 1 :] / scale[j] * (w - offset[j])
        inside = (curve >= y[j + 1 :] - tol) & (curve <= z[j + 1 :] + tol)
        stop = inside.size if inside.all() else int(np.argmin(inside))
        ks.append(np.arange(j + 1, j + 1 + stop))
        ws.append(np.clip(curve[:stop], y[j + 1 : j + 1 + stop], z[j + 1 : j + 1 + stop]))
    return np.concatenate(ks), np.concatenate(ws)


def candidate_levels(
    bounds: Bounds,
    params: VehicleParams,
    grid: PathGrid,
    levels_per_step: int,
    incumbent=None,
    round_index: int = 0,
    cruise_speeds=(),
) -> tuple[list[np.ndarray], float]:
    """Per-point candidate speeds for one refinement round and the lattice spacing used.

    Round 0 spans each corridor with at most ``levels_per_step`` lattice
    levels.  Round ``r`` halves the spacing ``r`` times and keeps
    ``levels_per_step`` levels centred on the incumbent.  Extra levels: the
    corridor ends, any ``cruise_speeds`` inside the corridor, the incumbent,
    and the zero-force continuations of every incumbent point that is off the
    lattice and of corridor ends within two cells of the incumbent (coasting
    from such a point would otherwise leave the level set).
    """
    offset, scale = _lattice_frame(params, grid)
    y, z = bounds.y, bounds.z
    n = grid.n
    width = float(np.max((z - y) / scale))
    delta0 = width / (levels_per_step - 1)
    if delta0 <= 0:
        delta0 = 1.0
    delta = delta0 / 2**round_index
    half = (levels_per_step - 1) // 2
    cruise = [w for w in cruise_speeds if math.isfinite(w)]
    seed_k = np.empty(0, dtype=np.int64)
    seed_w = np.empty(0)
    if incumbent is not None:
        inc = np.asarray(incumbent, dtype=float)
        m = (inc - offset) / (scale * delta)
        off = np.abs(m - np.round(m)) > 1e-6
        off[-1] = False
        seeds = [(j, inc[j]) for j in np.flatnonzero(off)]
        # corridor ends the incumbent passes close to
        reach = 2.0 * scale * delta
        for bound in (y, z):
            near = (np.abs(inc - bound) <= reach) & (inc != bound)
            near[-1] = False
            seeds.extend((j, bound[j]) for j in np.flatnonzero(near))
        seed_k, seed_w = _coast_extras(seeds, offset, scale, y, z, TOL_FEAS)
        order = np.argsort(seed_k, kind="stable")
        seed_k, seed_w = seed_k[order], seed_w[order]
    cuts = np.searchsorted(seed_k, np.arange(n + 1))
    levels = []
    for k in range(n):
        if k == 0:
            levels.append(np.array([grid.w_in]))
            continue
        if k == n - 1:
            levels.append(np.array([grid.w_fin]))
            continue
        extra = [y[k], z[k], *(w for w in cruise if y[k] <= w <= z[k])]
        extra.extend(seed_w[cuts[k] : cuts[k + 1]])
        window = None
        if incumbent is not None:
            centre = round((incumbent[k] - offset[k]) / (scale[k] * delta))
            window = (centre - half, centre + half)
            extra.append(incumbent[k])
        levels.append(_level_set(k, y[k], z[k], offset, scale, delta, window, extra))
    return levels, delta


# --------------------------------------------------------------------------
# stage kernel


@njit(cache=True)
def _ub_ok(w, wt, a, h, pm, fric, res, tol):
    cap = fric
    if w > 0.0:
        p = pm / math.sqrt(2.0 * w)
        if p < cap:
            cap = p
    f = (wt - w) / h + (1.0 - a) / h * w + res
    return f <= cap + tol


@njit(cache=True)
def _grid_kernel(lv, ptr, res, fric, mono, a, h, pm, lam_m, eta, eps_speed, tol, relaxed):
    n = ptr.size - 1
    V = np.full(lv.size, np.inf)
    pred = np.full(lv.size, -1, dtype=np.int64)
    V[0] = 0.0
    gam = (1.0 - a) / h
    dq_pos = np.empty(lv.size, dtype=np.int64)
    dq_neg = np.empty(lv.size, dtype=np.int64)
    for k in range(n - 1):
        o0, o1 = ptr[k], ptr[k + 1]
        t0, t1 = ptr[k + 1], ptr[k + 2]
        ap = np.empty(o1 - o0)
        an = np.empty(o1 - o0)
        for i in range(o0, o1):
            w = lv[i]
            ts = 1.0 / math.sqrt(2.0 * (w if w > eps_speed else eps_speed))
            ap[i - o0] = V[i] + h * ts - lam_m * a * w
            an[i - o0] = V[i] + h * ts - eta * lam_m * a * w
        if relaxed or mono[k]:
            pl = o0
            p0 = o0
            ph = o0
            hp = 0
            tp = 0
            hn = 0
            tn = 0
            next_pos = o0
            next_neg = o0
            for q in range(t0, t1):
                wt = lv[q]
                # origins with f >= 0 satisfy a*w <= wt + h*res
                while p0 < o1 and a * lv[p0] <= wt + h * res[k]:
                    p0 += 1
                if relaxed:
                    ph = o1
                else:
                    while ph < o1 and lv[ph] <= (wt + h * res[k] + h * (fric[k] + tol)) / a:
                        ph += 1
                    while pl < o1 and not _ub_ok(lv[pl], wt, a, h, pm, fric[k], res[k], tol):
                        pl += 1
                # positive-force window [pl, p0)
                end = p0
                while next_pos < end:
                    i = next_pos
                    if V[i] < np.inf:
                        while tp > hp and ap[dq_pos[tp - 1] - o0] >= ap[i - o0]:
                            tp -= 1
                        dq_pos[tp] = i
                        tp += 1
                    next_pos += 1
                while tp > hp and dq_pos[hp] < pl:
                    hp += 1
                # negative-force window [max(pl, p0), ph)
                start = pl if pl > p0 else p0
                if next_neg < start:
                    next_neg = start
                while next_neg < ph:
                    i = next_neg
                    if V[i] < np.inf:
                        while tn > hn and an[dq_neg[tn - 1] - o0] >= an[i - o0]:
                            tn -= 1
                        dq_neg[tn] = i
                        tn += 1
                    next_neg += 1
                while tn > hn and dq_neg[hn] < start:
                    hn += 1
                best = np.inf
                arg = -1
                if tp > hp:
                    i = dq_pos[hp]
                    c = ap[i - o0] + lam_m * (wt + h * res[k])
                    if c < best:
                        best = c
                        arg = i
                if tn > hn:
                    i = dq_neg[hn]
                    c = an[i - o0] + eta * lam_m * (wt + h * res[k])
                    if c < best:
                        best = c
                        arg = i
                V[q] = best
                pred[q] = arg
        else:
            for q in range(t0, t1):
                wt = lv[q]
                best = np.inf
                arg = -1
                for i in range(o0, o1):
                    if V[i] == np.inf:
                        continue
                    w = lv[i]
                    f = (wt - w) / h + gam * w + res[k]
                    if f < -fric[k] - tol or not _ub_ok(w, wt, a, h, pm, fric[k], res[k], tol):
                        continue
                    if f >= 0.0:
                        c = ap[i - o0] + lam_m * (wt + h * res[k])
                    else:
                        c = an[i - o0] + eta * lam_m * (wt + h * res[k])
                    if c < best:
                        best = c
                        arg = i
                V[q] = best
                pred[q] = arg
    return V, pred


def _solve_levels(levels, params, grid, weights, relaxed, tol, epsilon_speed):
    ptr = np.zeros(len(levels) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([lv.size for lv in levels])
    flat = np.concatenate(levels)
    a = 1.0 - grid.h * params.gamma
    w_hat = critical_speeds(params, grid)
    mono = (a - grid.h * params.p_over_m / (2.0 * w_hat) ** 1.5) >= 0
    V, pred = _grid_kernel(
        flat,
        ptr,
        np.ascontiguousarray(grid.resistance(params)),
        np.ascontiguousarray(grid.friction_cap(params)),
        mono,
        a,
        grid.h,
        params.p_over_m,
        weights.lam * params.M,
        params.eta,
        epsilon_speed,
        tol,
        relaxed,
    )
    last = ptr[-2]
    if not math.isfinite(V[last]):
        raise OracleNoPath("no grid path reaches the final speed")
    w = np.empty(grid.n)
    idx = last
    for k in range(grid.n - 1, -1, -1):
        w[k] = flat[idx]
        idx = pred[idx]
    return evaluate_objective(w, params, grid, weights, epsilon_speed)


def solve_grid(
    bounds: Bounds,
    params: VehicleParams,
    grid: PathGrid,
    weights: Weights,
    config: OracleConfig | None = None,
    epsilon_speed: float = EPSILON_SPEED,
) -> OracleResult:
    """Dense grid DP over ``[y, z]`` with windowed refinement around the incumbent."""
    cfg = config or OracleConfig()
    cruise = reference_speeds(params, weights)
    incumbent = None
    objectives = []
    profile = None
    levels: list[np.ndarray] = []
    delta = math.nan
    for r in range(cfg.refine_rounds + 1):
        levels, delta = candidate_levels(bounds, params, grid, cfg.levels_per_step, incumbent, r, cruise)
        profile = _solve_levels(levels, params, grid, weights, cfg.relaxed, cfg.tol, epsilon_speed)
        objectives.append(profile.objective)
        incumbent = profile.w
    gap = objectives[-2] - objectives[-1] if len(objectives) > 1 else math.nan
    quantum = delta / grid.h
    return OracleResult(
        profile=profile,
        objective=profile.objective,
        grid_gap_estimate=float(gap),
        round_objectives=tuple(objectives),
        spacing=delta,
        force_quantum=quantum,
        levels=levels,
    )


def solve_exhaustive(
    levels: list[np.ndarray],
    params: VehicleParams,
    grid: PathGrid,
    weights: Weights,
    relaxed: bool = False,
    tol: float = TOL_FEAS,
    epsilon_speed: float = EPSILON_SPEED,
    max_combinations: int = 20_000_000,
    chunk: int = 200_000,
) -> SpeedProfile:
    """Best profile by enumerating every combination of interior levels."""
    interior = levels[1:-1]
    total = math.prod(lv.size for lv in interior)
    if total > max_combinations:
        raise ValueError(f"{total} combinations exceed the enumeration limit")
    n, h = grid.n, grid.h
    res = grid.resistance(params)
    fric = grid.friction_cap(params)
    best_obj, best_w = math.inf, None
    combos = itertools.product(*interior)
    while True:
        block = list(itertools.islice(combos, chunk))
        if not block:
            break
        w = np.empty((len(block), n))
        w[:, 0] = levels[0][0]
        w[:, -1] = levels[-1][0]
        if n > 2:
            w[:, 1:-1] = np.array(block)
        f = np.diff(w, axis=1) / h + params.gamma * w[:, :-1] + res
        ok = np.all(w >= 0, axis=1)
        if not relaxed:
            with np.errstate(divide="ignore"):
                pcap = np.where(w[:, :-1] > 0, params.p_over_m / np.sqrt(2.0 * np.maximum(w[:, :-1], 0.0)), np.inf)
            ok &= np.all((f >= -fric - tol) & (f <= np.minimum(fric, pcap) + tol), axis=1)
        if not ok.any():
            continue
        t = np.sum(h / np.sqrt(2.0 * np.maximum(w[:, :-1], epsilon_speed)), axis=1)
        e = np.sum(h * params.M * np.maximum(params.eta * f, f), axis=1)
        obj = np.where(ok, weights.lam * e + t, np.inf)
        i = int(np.argmin(obj))
        if obj[i] < best_obj:
            best_obj, best_w = float(obj[i]), w[i].copy()
    if best_w is None:
        raise OracleNoPath("no feasible combination")
    return evaluate_objective(best_w, params, grid, weights, epsilon_speed)


def check_exactness(
    result: OracleResult,
    params: VehicleParams,
    grid: PathGrid,
    tol: float = TOL_FEAS,
    allowance: float | None = None,
) -> tuple[bool, list[tuple[str, int, float]]]:
    """Force/power residuals of an oracle optimum that exceed ``tol`` plus the grid allowance.

    The default allowance is one force quantum of the final lattice, the
    largest force error a single level of rounding can introduce.
    """
    if allowance is None:
        allowance = result.force_quantum
    _, viol = is_feasible_profile(result.profile.w, params, grid, tol=tol + allowance)
    viol = [v for v in viol if v[0] in ("power_max", "force_max", "force_min")]
    return not viol, viol


# --------------------------------------------------------------------------
# feasibility by lattice reachability


def _ell_scalar(w, a, h, pm, fric):
    cap = fric if w <= 0 else min(fric, pm / math.sqrt(2.0 * w))
    return a * w + h * cap


def grid_reachable(
    params: VehicleParams, grid: PathGrid, spacing: float = 1e-6
) -> tuple[bool, np.ndarray | None]:
    """Search a fine coasting-aligned integer lattice for a feasible profile.

    Uses only the box limits, never the corridor.  The reachable set at each
    point is an integer interval (traction reach is non-decreasing in the
    level when the step-size monotonicity condition holds); a witness is
    rebuilt backwards and returned.
    """
    n, h = grid.n, grid.h
    a = 1.0 - h * params.gamma
    pm = params.p_over_m
    res = grid.resistance(params)
    fric = grid.friction_cap(params)
    lim = grid.limits()
    w_hat = critical_speeds(params, grid)
    if np.any(a - h * pm / (2.0 * w_hat) ** 1.5 < 0):
        raise ValueError("lattice reachability needs the step-size monotonicity condition")
    offset, scale = _lattice_frame(params, grid)

    def level(k, m):
        return offset[k] + scale[k] * spacing * m

    def up_reach(k, m):
        # largest target level reachable from level m under the traction caps
        w = level(k, m)
        cap = fric[k] if w <= 0 else min(fric[k], pm / math.sqrt(2.0 * w))
        return m + math.floor(h * cap / (scale[k + 1] * spacing) + 1e-9)

    def down_reach(k):
        return math.floor(h * fric[k] / (scale[k + 1] * spacing) + 1e-9)

    def box(k):
        unit = scale[k] * spacing
        return math.ceil((lim.w_min_eff[k] - offset[k]) / unit - 1e-9), math.floor(
            (lim.w_max_eff[k] - offset[k]) / unit + 1e-9
        )

    def final_ok(w):
        f = (grid.w_fin - w) / h + params.gamma * w + res[-1]
        cap = fric[-1] if w <= 0 else min(fric[-1], pm / math.sqrt(2.0 * w))
        return -fric[-1] - TOL_FEAS <= f <= cap + TOL_FEAS

    if n == 2:
        ok = final_ok(grid.w_in)
        return ok, (np.array([grid.w_in, grid.w_fin]) if ok else None)

    reach = [(0, 0)]
    for k in range(n - 2):
        lo, hi = reach[-1]
        b_lo, b_hi = box(k + 1)
        nlo = max(lo - down_reach(k), b_lo)
        nhi = min(up_reach(k, hi), b_hi)
        if nlo > nhi:
            return False, None
        reach.append((nlo, nhi))

    # last free point n-2: find a level that steps exactly onto w_fin
    k = n - 2
    lo, hi = reach[k]
    brake_hi = math.floor(((grid.w_fin + h * res[k] + h * (fric[k] + TOL_FEAS)) / a - offset[k]) / (scale[k] * spacing))
    cand_hi = min(hi, brake_hi)
    if cand_hi < lo or not final_ok(level(k, cand_hi)):
        return False, None
    ms = [0] * n
    ms[k] = cand_hi
    for kk in range(k - 1, -1, -1):
        lo, hi = reach[kk]
        m = min(hi, ms[kk + 1] + down_reach(kk))
        if m < lo or up_reach(kk, m) < ms[kk + 1]:
            raise AssertionError("lattice witness reconstruction failed")
        ms[kk] = m
    w = np.array([level(kk, ms[kk]) for kk in range(n - 1)] + [grid.w_fin])
    w[0] = grid.w_in
    w = np.maximum(w, 0.0)
    return True, w


# --------------------------------------------------------------------------
# explicit DP state graph


def _graph_states(bounds: Bounds, w_plus: float, w_minus: float, tol: float):
    n = bounds.y.size
    nodes = {(0, 0): float(bounds.y[0]), (n - 1, 0): float(bounds.y[-1])}
    for j in range(1, n - 1):
        y, z = float(bounds.y[j]), float(bounds.z[j])
        nodes[(j, 0)] = y
        nodes[(j, 1)] = z
        if math.isfinite(w_plus) and y - tol <= w_plus <= z + tol:
            nodes[(j, 2)] = w_plus
        if math.isfinite(w_minus) and w_minus != w_plus and y - tol <= w_minus <= z + tol:
            nodes[(j, 3)] = w_minus
    return nodes


def materialize_dp_graph(
    bounds: Bounds,
    params: VehicleParams,
    grid: PathGrid,
    weights: Weights,
    tol: float = TOL_FEAS,
    epsilon_speed: float = EPSILON_SPEED,
) -> nx.DiGraph:
    """Build the planner's state graph edge by edge from the scalar move primitives."""
    n = grid.n
    w_plus, w_minus = reference_speeds(params, weights)
    nodes = _graph_states(bounds, w_plus, w_minus, tol)
    lam_m = weights.lam * params.M
    eta_lmg = params.eta * lam_m * params.gamma
    k_pos = (1.0 - params.eta) * lam_m
    res = grid.resistance(params)

    def speed_term(w):
        return eta_lmg * w + 1.0 / math.sqrt(2.0 * max(w, epsilon_speed))

    def add(g, u, v, weight):
        if not g.has_edge(u, v) or weight < g[u][v]["weight"]:
            g.add_edge(u, v, weight=weight)

    g = nx.DiGraph()
    g.add_nodes_from(nodes)
    a = 1.0 - grid.h * params.gamma
    for (j, t), w in nodes.items():
        if j == n - 1:
            continue
        # single step
        for (jj, tt), wt in nodes.items():
            if jj == j + 1 and in_gamma(w, wt, j, bounds, params, grid, tol):
                f = (wt - w) / grid.h + (params.gamma * w + float(res[j]))
                add(g, (j, t), (jj, tt), speed_term(w) + k_pos * max(f, 0.0))
        # coast for i steps, then one step onto a tagged speed
        sets = index_sets(j, w, bounds, w_plus, w_minus, params, grid, tol)
        curve = [w]
        acc = [speed_term(w)]
        for i in range(1, max((max(s) for s in sets if s), default=0) + 1):
            wc = a * curve[-1] - grid.h * float(res[j + i - 1])
            curve.append(wc)
            acc.append(acc[-1] + speed_term(wc))
        for r, idx in enumerate(sets):
            tag = (1, 0, 2, 3)[r]
            for i in idx:
                k = j + i
                target = (k + 1, 0) if k + 1 == n - 1 else (k + 1, tag)
                if target not in nodes:
                    continue
                if k + 1 == n - 1 and tag >= 2:
                    continue
                wt = nodes[target]
                f = (wt - curve[i]) / grid.h + (params.gamma * curve[i] + float(res[k]))
                add(g, (j, t), target, acc[i] + k_pos * max(f, 0.0))
    return g


def graph_search_value(
    bounds: Bounds,
    params: VehicleParams,
    grid: PathGrid,
    weights: Weights,
    tol: float = TOL_FEAS,
    epsilon_speed: float = EPSILON_SPEED,
) -> float:
    """Shortest-path value from the start state to the final state (stage-cost units)."""
    g = materialize_dp_graph(bounds, params, grid, weights, tol, epsilon_speed)
    try:
        return float(nx.dijkstra_path_length(g, (0, 0), (grid.n - 1, 0)))
    except nx.NetworkXNoPath:
        return math.inf


def assumptions_hold(params: VehicleParams, grid: PathGrid, weights: Weights, bounds: Bounds) -> bool:
    return check_assumptions(params, grid, weights, bounds_z=bounds.z).all_hold
