"""Bound tightening on the feasible set of speed profiles.

The feasible set is a lattice under component-wise min/max, so it has a
smallest element ``y`` and a largest element ``z`` whenever it is non-empty.
Both are obtained as the fixed point of alternating forward/backward sweeps of
four one-step tightening maps.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .model import EffectiveLimits, PathGrid, VehicleParams, critical_speeds

log = logging.getLogger(__name__)

TOL_ROOT = 1e-10
TOL_FEAS = 1e-6
B1, B2, B3, B4 = "B1", "B2", "B3", "B4"


# --------------------------------------------------------------------------
# scalar kernels, shared by the public API and the sweeps
#   a      = 1 - h*gamma
#   pm     = P_max / M
#   fric   = g*mu*cos(alpha_i)
#   res_h  = h*g*(sin(alpha_i) + c*cos(alpha_i))


@njit(cache=True)
def _ell(w, a, h, pm, fric):
    # power cap is +inf at w <= 0, so the friction branch applies there
    if w <= 0.0:
        return a * w + h * fric
    p = pm / math.sqrt(2.0 * w)
    return a * w + h * (p if p < fric else fric)


@njit(cache=True)
def _xi1(w_next, w_min, a, h, pm, fric, res_h, tol_root):
    target = w_next + res_h
    if _ell(w_min, a, h, pm, fric) >= target:
        return w_min
    w_hat = 0.5 * (pm / fric) ** 2
    w_fric = (target - h * fric) / a
    if w_fric <= w_hat:
        return w_fric
    lo = w_hat if w_hat > w_min else w_min
    hi = target / a
    while hi - lo > tol_root:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _ell(mid, a, h, pm, fric) >= target:
            hi = mid
        else:
            lo = mid
    return hi


@njit(cache=True)
def _xi2(w_i, w_max_next, a, h, pm, fric, res_h):
    v = _ell(w_i, a, h, pm, fric) - res_h
    return v if v < w_max_next else w_max_next


@njit(cache=True)
def _xi3(w_i, w_min_next, a, h, fric, res_h):
    v = a * w_i - res_h - h * fric
    return v if v > w_min_next else w_min_next


@njit(cache=True)
def _xi4(w_next, w_max_i, a, h, fric, res_h):
    v = (w_next + res_h + h * fric) / a
    return v if v < w_max_i else w_max_i


@njit(cache=True)
def _sweep_b1(cap, a, h, pm, fric, res_h):
    n = cap.size
    p = np.empty(n)
    p[0] = cap[0]
    for j in range(n - 1):
        p[j + 1] = _xi2(p[j], cap[j + 1], a, h, pm, fric[j], res_h[j])
    return p


@njit(cache=True)
def _sweep_b2(cap, a, h, fric, res_h):
    n = cap.size
    p = np.empty(n)
    p[n - 1] = cap[n - 1]
    for j in range(n - 2, -1, -1):
        p[j] = _xi4(p[j + 1], cap[j], a, h, fric[j], res_h[j])
    return p


@njit(cache=True)
def _sweep_b3(floor, a, h, pm, fric, res_h, tol_root):
    n = floor.size
    p = np.empty(n)
    p[n - 1] = floor[n - 1]
    for j in range(n - 2, -1, -1):
        p[j] = _xi1(p[j + 1], floor[j], a, h, pm, fric[j], res_h[j], tol_root)
    return p


@njit(cache=True)
def _sweep_b4(floor, a, h, fric, res_h):
    n = floor.size
    p = np.empty(n)
    p[0] = floor[0]
    for j in range(n - 1):
        p[j + 1] = _xi3(p[j], floor[j + 1], a, h, fric[j], res_h[j])
    return p


# --------------------------------------------------------------------------
# public API


@dataclass(frozen=True, eq=False)
class Bounds:
    """Tightened lower (``y``) and upper (``z``) speed vectors."""

    y: np.ndarray
    z: np.ndarray
    converged: bool
    iterations: int

    @property
    def n(self) -> int:
        return int(self.y.size)


@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    witness_violation: tuple[int, float] | None = None


class Infeasible(Exception):
    """The feasible set is empty; ``y_i > z_i`` at the witness index."""

    def __init__(self, index: int, amount: float, y=None, z=None, iterations: int = 0):
        self.index = int(index)
        self.amount = float(amount)
        self.y = y
        self.z = z
        self.iterations = iterations
        super().__init__(f"infeasible: lower bound exceeds upper bound by {amount:.6g} at point {index}")

    @property
    def verdict(self) -> FeasibilityVerdict:
        return FeasibilityVerdict(False, (self.index, self.amount))


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, u=None, l=None):
        super().__init__(message)
        self.u = u
        self.l = l


@dataclass(frozen=True)
class _StepCoeffs:
    a: float
    h: float
    pm: float
    fric: np.ndarray
    res_h: np.ndarray


def _coeffs(params: VehicleParams, grid: PathGrid) -> _StepCoeffs:
    a = 1.0 - grid.h * params.gamma
    if a <= 0:
        raise ValueError("step too large: 1 - h*gamma must be positive")
    return _StepCoeffs(
        a=a,
        h=grid.h,
        pm=params.p_over_m,
        fric=np.ascontiguousarray(grid.friction_cap(params)),
        res_h=np.ascontiguousarray(grid.h * grid.resistance(params)),
    )


def _check_step(i: int, grid: PathGrid):
    if not 0 <= i < grid.n - 1:
        raise IndexError(f"step index {i} outside [0, {grid.n - 2}]")


def critical_speed(i: int, params: VehicleParams, grid: PathGrid) -> float:
    _check_step(i, grid)
    return float(critical_speeds(params, grid)[i])


def ell(i: int, w: float, params: VehicleParams, grid: PathGrid) -> float:
    """``(1 - h gamma) w + h min(P/(M sqrt(2w)), g mu cos a_i)``; friction branch at ``w = 0``."""
    _check_step(i, grid)
    if w < 0:
        raise ValueError("ell is defined for w >= 0 only")
    k = _coeffs(params, grid)
    return float(_ell(w, k.a, k.h, k.pm, k.fric[i]))


def xi1(i: int, w_next: float, w_min_i: float, params: VehicleParams, grid: PathGrid,
        tol_root: float = TOL_ROOT) -> float:
    """Smallest ``w_i >= w_min_i`` from which ``w_next`` is reachable under the traction caps."""
    _check_step(i, grid)
    k = _coeffs(params, grid)
    return float(_xi1(w_next, w_min_i, k.a, k.h, k.pm, k.fric[i], k.res_h[i], tol_root))


def xi2(i: int, w_i: float, w_max_next: float, params: VehicleParams, grid: PathGrid) -> float:
    _check_step(i, grid)
    k = _coeffs(params, grid)
    return float(_xi2(w_i, w_max_next, k.a, k.h, k.pm, k.fric[i], k.res_h[i]))


def xi3(i: int, w_i: float, w_min_next: float, params: VehicleParams, grid: PathGrid) -> float:
    _check_step(i, grid)
    k = _coeffs(params, grid)
    return float(_xi3(w_i, w_min_next, k.a, k.h, k.fric[i], k.res_h[i]))


def xi4(i: int, w_next: float, w_max_i: float, params: VehicleParams, grid: PathGrid) -> float:
    _check_step(i, grid)
    k = _coeffs(params, grid)
    return float(_xi4(w_next, w_max_i, k.a, k.h, k.fric[i], k.res_h[i]))


def sweep(kind: str, seed, params: VehicleParams, grid: PathGrid, limits: EffectiveLimits,
          tol_root: float = TOL_ROOT) -> np.ndarray:
    """One directional tightening pass.

    The seed acts as the cap (``B1``, ``B2``) or floor (``B3``, ``B4``) being
    tightened, intersected with the effective limits:

    - ``B1``: forward, maximum traction from ``p[0]``
    - ``B2``: backward, maximum braking into ``p[-1]``
    - ``B3``: backward, minimum speed that still reaches ``p[j+1]`` under traction caps
    - ``B4``: forward, slowest speed reachable under full braking
    """
    seed = np.asarray(seed, dtype=float)
    if seed.shape != (grid.n,):
        raise ValueError(f"seed must have length {grid.n}")
    k = _coeffs(params, grid)
    if kind == B1:
        return _sweep_b1(np.minimum(seed, limits.w_max_eff), k.a, k.h, k.pm, k.fric, k.res_h)
    if kind == B2:
        return _sweep_b2(np.minimum(seed, limits.w_max_eff), k.a, k.h, k.fric, k.res_h)
    if kind == B3:
        return _sweep_b3(np.maximum(seed, limits.w_min_eff), k.a, k.h, k.pm, k.fric, k.res_h, tol_root)
    if kind == B4:
        return _sweep_b4(np.maximum(seed, limits.w_min_eff), k.a, k.h, k.fric, k.res_h)
    raise ValueError(f"unknown sweep kind {kind!r}")


def compute_zy(
    params: VehicleParams,
    grid: PathGrid,
    limits: EffectiveLimits | None = None,
    epsilon: float = 1e-9,
    max_iters: int = 100_000,
    tol_feas: float = TOL_FEAS,
    tol_root: float = TOL_ROOT,
    check_monotone: bool = False,
) -> Bounds:
    """Iterate the four sweeps to the lattice bounds ``(y, z)``.

    Raises :class:`Infeasible` as soon as the upper iterate falls below the
    lower one, and :class:`ConvergenceError` after ``max_iters`` rounds.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if limits is None:
        limits = grid.limits()
    k = _coeffs(params, grid)
    u = np.array(limits.w_max_eff, dtype=float)
    l = np.array(limits.w_min_eff, dtype=float)
    for it in range(1, max_iters + 1):
        u_half = _sweep_b1(u, k.a, k.h, k.pm, k.fric, k.res_h)
        u_new = _sweep_b2(u_half, k.a, k.h, k.fric, k.res_h)
        l_half = _sweep_b3(l, k.a, k.h, k.pm, k.fric, k.res_h, tol_root)
        l_new = _sweep_b4(l_half, k.a, k.h, k.fric, k.res_h)
        if check_monotone:
            slack = 1e-12 * (1.0 + np.abs(u))
            assert np.all(u_new <= u_half + slack) and np.all(u_half <= u + slack)
            slack = 1e-12 * (1.0 + np.abs(l))
            assert np.all(l_new >= l_half - slack) and np.all(l_half >= l - slack)
        du = float(np.max(np.abs(u_new - u)))
        dl = float(np.max(np.abs(l_new - l)))
        u, l = u_new, l_new
        gap = l - u
        worst = int(np.argmax(gap))
        if du <= epsilon and dl <= epsilon:
            if gap[worst] > tol_feas:
                raise Infeasible(worst, gap[worst], y=l, z=u, iterations=it)
            # clip rounding overlap so that y <= z holds exactly
            y = np.minimum(l, u)
            y[0] = u[0] = grid.w_in
            y[-1] = u[-1] = grid.w_fin
            y.setflags(write=False)
            u.setflags(write=False)
            log.debug("bounds converged after %d iterations", it)
            return Bounds(y=y, z=u, converged=True, iterations=it)
        if gap[worst] > tol_feas:
            raise Infeasible(worst, gap[worst], y=l, z=u, iterations=it)
    raise ConvergenceError(f"bound tightening did not converge in {max_iters} iterations", u=u, l=l)


def feasibility(params: VehicleParams, grid: PathGrid, **kwargs) -> tuple[FeasibilityVerdict, Bounds | None]:
    """Convenience wrapper returning a verdict instead of raising."""
    try:
        b = compute_zy(params, grid, **kwargs)
    except Infeasible as exc:
        return exc.verdict, None
    return FeasibilityVerdict(True), b


def is_feasible_profile(
    w,
    params: VehicleParams,
    grid: PathGrid,
    limits: EffectiveLimits | None = None,
    tol: float = TOL_FEAS,
) -> tuple[bool, list[tuple[str, int, float]]]:
    """Check every constraint of the discretized problem.

    Returns ``(ok, violations)`` where each violation is
    ``(constraint, index, residual)`` with a positive residual.
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (grid.n,):
        raise ValueError(f"expected {grid.n} speeds, got shape {w.shape}")
    if limits is None:
        limits = grid.limits()
    f = np.diff(w) / grid.h + params.gamma * w[:-1] + grid.resistance(params)
    fric = grid.friction_cap(params)
    with np.errstate(divide="ignore"):
        pcap = np.where(w[:-1] > 0, params.p_over_m / np.sqrt(2.0 * np.maximum(w[:-1], 0.0)), np.inf)
    checks = [
        ("power_max", f - pcap),
        ("force_max", f - fric),
        ("force_min", -fric - f),
        ("speed_max", w - limits.w_max_eff),
        ("speed_min", limits.w_min_eff - w),
    ]
    violations = []
    for name, resid in checks:
        for idx in np.flatnonzero(resid > tol):
            violations.append((name, int(idx), float(resid[idx])))
    return not violations, violations


def lattice_meet_join(w, w2) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(w, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    if w.shape != w2.shape:
        raise ValueError("vectors must have equal length")
    return np.minimum(w, w2), np.maximum(w, w2)
