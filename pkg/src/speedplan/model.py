"""Domain types, force/objective evaluation and assumption checks.

Conventions: all quantities are SI, speeds are stored as half-squared speeds
``w = v**2 / 2`` (m^2/s^2), and step indices are 0-based: step ``i`` joins
grid points ``i`` and ``i + 1`` for ``i`` in ``[0, n - 2]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

#: Floor applied to ``w`` inside every ``1/sqrt(2w)`` evaluation.
EPSILON_SPEED = 1e-3


@dataclass(frozen=True)
class VehicleParams:
    """Longitudinal vehicle model parameters."""

    M: float
    P_max: float
    eta: float
    c: float
    Gamma: float
    mu: float
    g: float = 9.81

    def __post_init__(self):
        if not self.M > 0:
            raise ValueError(f"mass must be positive, got {self.M}")
        if not self.P_max > 0:
            raise ValueError(f"P_max must be positive, got {self.P_max}")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if self.c < 0 or self.Gamma < 0:
            raise ValueError("rolling and drag coefficients must be non-negative")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")

    @property
    def gamma(self) -> float:
        """Drag coefficient per unit mass (1/m)."""
        return self.Gamma / self.M

    @property
    def p_over_m(self) -> float:
        return self.P_max / self.M


FIAT_500E = VehicleParams(M=1365.0, P_max=87000.0, eta=0.7, c=0.007, Gamma=0.399, mu=0.7)


def _frozen(a, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PathGrid:
    """Uniform arc-length grid with per-step slopes and per-point speed limits.

    ``alpha`` has one entry per step (length ``n - 1``), ``w_max`` one entry
    per grid point (length ``n``).
    """

    h: float
    alpha: np.ndarray
    w_max: np.ndarray
    w_in: float
    w_fin: float

    def __post_init__(self):
        object.__setattr__(self, "alpha", _frozen(self.alpha, "alpha"))
        object.__setattr__(self, "w_max", _frozen(self.w_max, "w_max"))
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "w_in", float(self.w_in))
        object.__setattr__(self, "w_fin", float(self.w_fin))
        n = self.w_max.size
        if n < 2:
            raise ValueError("a path grid needs at least two points")
        if self.alpha.size != n - 1:
            raise ValueError(f"alpha must have length n-1={n - 1}, got {self.alpha.size}")
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if np.any(self.w_max < 0):
            raise ValueError("w_max must be non-negative")
        if np.any(np.abs(self.alpha) >= math.pi / 2):
            raise ValueError("slopes must satisfy |alpha| < pi/2")
        if not 0.0 <= self.w_in <= self.w_max[0]:
            raise ValueError(f"w_in={self.w_in} outside [0, w_max[0]={self.w_max[0]}]")
        if not 0.0 <= self.w_fin <= self.w_max[-1]:
            raise ValueError(f"w_fin={self.w_fin} outside [0, w_max[-1]={self.w_max[-1]}]")

    @property
    def n(self) -> int:
        return int(self.w_max.size)

    @cached_property
    def sin_alpha(self) -> np.ndarray:
        return np.sin(self.alpha)

    @cached_property
    def cos_alpha(self) -> np.ndarray:
        return np.cos(self.alpha)

    def resistance(self, params: VehicleParams) -> np.ndarray:
        """Grade plus rolling resistance per unit mass, ``g(sin a + c cos a)``."""
        return params.g * (self.sin_alpha + params.c * self.cos_alpha)

    def friction_cap(self, params: VehicleParams) -> np.ndarray:
        """Tyre force cap per unit mass, ``g mu cos a``."""
        return params.g * params.mu * self.cos_alpha

    def limits(self) -> "EffectiveLimits":
        return EffectiveLimits.from_grid(self)


@dataclass(frozen=True, eq=False)
class EffectiveLimits:
    """Box limits with the boundary conditions folded in."""

    w_min_eff: np.ndarray
    w_max_eff: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "w_min_eff", _frozen(self.w_min_eff, "w_min_eff"))
        object.__setattr__(self, "w_max_eff", _frozen(self.w_max_eff, "w_max_eff"))
        if self.w_min_eff.shape != self.w_max_eff.shape:
            raise ValueError("limit vectors must have equal length")
        if np.any(self.w_min_eff > self.w_max_eff):
            raise ValueError("w_min_eff must not exceed w_max_eff")

    @classmethod
    def from_grid(cls, grid: PathGrid) -> "EffectiveLimits":
        lo = np.zeros(grid.n)
        hi = np.array(grid.w_max, dtype=float)
        lo[0] = hi[0] = grid.w_in
        lo[-1] = hi[-1] = grid.w_fin
        return cls(lo, hi)


@dataclass(frozen=True)
class Weights:
    """Scalarization weight on energy (s/J)."""

    lam: float

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"lambda must be non-negative, got {self.lam}")


@dataclass(frozen=True, eq=False)
class SpeedProfile:
    w: np.ndarray
    f: np.ndarray
    objective: float
    travel_time: float
    energy: float

    @property
    def v(self) -> np.ndarray:
        return np.sqrt(2.0 * np.maximum(self.w, 0.0))


@dataclass(frozen=True, eq=False)
class AssumptionReport:
    """Outcome of the assumption checks.

    ``margins`` maps each condition to the evaluated left-hand side; a
    condition holds where its margin has the required sign.  ``cond2`` is only
    required at steps listed in ``cond2_applicable``.
    """

    a1_holds: np.ndarray
    cond1_holds: bool
    cond2_holds: np.ndarray
    cond3_holds: np.ndarray
    asscomb_holds: bool
    margins: dict = field(default_factory=dict)
    cond2_applicable: np.ndarray | None = None

    @property
    def assumption1(self) -> bool:
        return bool(np.all(self.a1_holds))

    @property
    def assumption2(self) -> bool:
        return bool(self.cond1_holds and np.all(self.cond2_holds) and np.all(self.cond3_holds))

    @property
    def all_hold(self) -> bool:
        return self.assumption1 and self.assumption2 and self.asscomb_holds

    def failures(self) -> list[str]:
        out = []
        if not self.assumption1:
            out.append(f"step-size monotonicity fails at {int(np.sum(~self.a1_holds))} steps")
        if not self.cond1_holds:
            out.append("cond1 (1 - h*gamma*(1 + lambda*P_max) > 0) fails")
        if not np.all(self.cond2_holds):
            out.append(f"cond2 (acceleration at w+) fails at {int(np.sum(~self.cond2_holds))} steps")
        if not np.all(self.cond3_holds):
            out.append(f"cond3 (deceleration at w-) fails at {int(np.sum(~self.cond3_holds))} steps")
        if not self.asscomb_holds:
            out.append("-(1 - eta)/h + gamma < 0 fails")
        return out


def force(w_i: float, w_next: float, i: int, params: VehicleParams, grid: PathGrid) -> float:
    """Specific force (m/s^2) needed to go from ``w_i`` to ``w_next`` over step ``i``."""
    if not 0 <= i < grid.n - 1:
        raise IndexError(f"step index {i} outside [0, {grid.n - 2}]")
    if w_i < 0:
        raise ValueError("w_i must be non-negative")
    sa, ca = math.sin(grid.alpha[i]), math.cos(grid.alpha[i])
    return (w_next - w_i) / grid.h + params.gamma * w_i + params.g * (sa + params.c * ca)


def forces(w: np.ndarray, params: VehicleParams, grid: PathGrid) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return np.diff(w) / grid.h + params.gamma * w[:-1] + grid.resistance(params)


def evaluate_objective(
    w,
    params: VehicleParams,
    grid: PathGrid,
    weights: Weights,
    epsilon_speed: float = EPSILON_SPEED,
) -> SpeedProfile:
    """Evaluate time, energy and the weighted objective of a speed vector."""
    w = np.array(w, dtype=float)
    if w.shape != (grid.n,):
        raise ValueError(f"expected {grid.n} speeds, got shape {w.shape}")
    if np.any(w < 0):
        raise ValueError("speeds must be non-negative")
    f = forces(w, params, grid)
    travel_time = float(np.sum(grid.h / np.sqrt(2.0 * np.maximum(w[:-1], epsilon_speed))))
    energy = float(np.sum(grid.h * params.M * np.maximum(params.eta * f, f)))
    objective = weights.lam * energy + travel_time
    w.setflags(write=False)
    f.setflags(write=False)
    return SpeedProfile(w=w, f=f, objective=objective, travel_time=travel_time, energy=energy)


def stage_cost_sum(
    w, params: VehicleParams, grid: PathGrid, weights: Weights, epsilon_speed: float = EPSILON_SPEED
) -> float:
    """Sum of the per-step costs the dynamic program accumulates.

    Each step contributes ``eta*lam*M*gamma*w_i + 1/sqrt(2 w_i)
    + (1 - eta)*lam*M*max(f_i, 0)``.  Differs from ``objective / h`` by a
    constant that depends only on the boundary speeds and the slopes, see
    :func:`objective_from_stage_sum`.
    """
    w = np.asarray(w, dtype=float)
    f = forces(w, params, grid)
    lam_m = weights.lam * params.M
    speed_terms = params.eta * lam_m * params.gamma * w[:-1] + 1.0 / np.sqrt(
        2.0 * np.maximum(w[:-1], epsilon_speed)
    )
    return float(np.sum(speed_terms + (1.0 - params.eta) * lam_m * np.maximum(f, 0.0)))


def objective_from_stage_sum(
    stage_sum: float, params: VehicleParams, grid: PathGrid, weights: Weights
) -> float:
    """Map a stage-cost sum back to the direct objective (s)."""
    lam_m_eta = weights.lam * params.M * params.eta
    const = lam_m_eta * (grid.w_fin - grid.w_in) + grid.h * lam_m_eta * float(
        np.sum(grid.resistance(params))
    )
    return grid.h * stage_sum + const


def reference_speeds(params: VehicleParams, weights: Weights) -> tuple[float, float]:
    """Cruise speeds minimizing the per-step cost under traction and under regen braking.

    Returns ``(w_plus, w_minus)``; either is ``inf`` when unbounded
    (``lam == 0``, ``gamma == 0``, or ``eta == 0`` for ``w_minus``).
    """
    k = 2.0 * weights.lam * params.M * params.gamma
    w_plus = k ** (-2.0 / 3.0) if k > 0 else math.inf
    k_eta = k * params.eta
    w_minus = k_eta ** (-2.0 / 3.0) if k_eta > 0 else math.inf
    return w_plus, w_minus


def critical_speeds(params: VehicleParams, grid: PathGrid) -> np.ndarray:
    """Per-step speeds where the power cap meets the friction cap."""
    return 0.5 * (params.p_over_m / grid.friction_cap(params)) ** 2


def check_assumptions(
    params: VehicleParams,
    grid: PathGrid,
    weights: Weights,
    bounds_z: np.ndarray | None = None,
) -> AssumptionReport:
    """Evaluate every sufficient condition the solver relies on.

    Without ``bounds_z`` the acceleration condition at ``w+`` is required at
    every step (conservative); with it, only at steps where ``z_i >= w+``.
    """
    h, gam = grid.h, params.gamma
    w_hat = critical_speeds(params, grid)
    a1 = 1.0 - h * gam - h * params.p_over_m / (2.0 * w_hat) ** 1.5
    cond1 = 1.0 - h * gam * (1.0 + weights.lam * params.P_max)

    w_plus, w_minus = reference_speeds(params, weights)
    fric = grid.friction_cap(params)
    resist = grid.resistance(params)
    if math.isinf(w_plus):
        cond2 = np.full(grid.n - 1, np.nan)
        applicable = np.zeros(grid.n - 1, dtype=bool)
    else:
        cond2 = np.minimum(fric, params.p_over_m / math.sqrt(2.0 * w_plus)) - gam * w_plus - resist
        if bounds_z is None:
            applicable = np.ones(grid.n - 1, dtype=bool)
        else:
            applicable = np.asarray(bounds_z, dtype=float)[:-1] >= w_plus
    cond2_holds = ~applicable | (cond2 > 0)

    if math.isinf(w_minus):
        cond3 = np.full(grid.n - 1, -math.inf)
    else:
        cond3 = -params.g * (grid.sin_alpha + (params.c + params.mu) * grid.cos_alpha) - gam * w_minus
    asscomb = -(1.0 - params.eta) / h + gam

    margins = {"a1": a1, "cond1": cond1, "cond2": cond2, "cond3": cond3, "asscomb": asscomb}
    return AssumptionReport(
        a1_holds=a1 >= 0,
        cond1_holds=bool(cond1 > 0),
        cond2_holds=cond2_holds,
        cond3_holds=cond3 < 0,
        asscomb_holds=bool(asscomb < 0),
        margins=margins,
        cond2_applicable=applicable,
    )
