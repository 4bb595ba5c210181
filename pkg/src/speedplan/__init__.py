"""Time/energy speed planning for a vehicle on a fixed path.

Typical use::

    from speedplan import FIAT_500E, Weights, plan, synthetic_track
    result = plan(FIAT_500E, synthetic_track(), Weights(5e-4))
    result.profile.v          # m/s at each grid point

The bound-tightening sweep used internally lives in
:mod:`speedplan.feasibility`; the top-level ``sweep`` is the weight sweep from
:mod:`speedplan.pareto`.
"""
import logging

from .dp import NoDpPath, PlanOptions, PlanResult, SpeedTag, build_solution, dyn_prog, plan
from .feasibility import (
    Bounds,
    ConvergenceError,
    FeasibilityVerdict,
    Infeasible,
    compute_zy,
    feasibility,
    is_feasible_profile,
    lattice_meet_join,
)
from .instances import InstanceSpec, random_feasible, random_grid, synthetic_track
from .model import (
    FIAT_500E,
    AssumptionReport,
    EffectiveLimits,
    PathGrid,
    SpeedProfile,
    VehicleParams,
    Weights,
    check_assumptions,
    evaluate_objective,
    force,
    reference_speeds,
)
from .oracle import OracleConfig, OracleResult, check_exactness, solve_exhaustive, solve_grid
from .pareto import (
    DEFAULT_LAMBDA,
    ParetoFront,
    ParetoPoint,
    dominance_filter,
    is_interior,
    solve_point,
    sweep,
    tradeoff_violations,
)
from .scenario import (
    ResultBundle,
    Scenario,
    ScenarioError,
    bundle_from_plan,
    emit_pareto,
    emit_result,
    load_result,
    load_scenario,
    load_scenario_file,
    resample,
)

logging.getLogger("speedplan").addHandler(logging.NullHandler())

__all__ = [
    "AssumptionReport",
    "Bounds",
    "ConvergenceError",
    "DEFAULT_LAMBDA",
    "EffectiveLimits",
    "FIAT_500E",
    "FeasibilityVerdict",
    "Infeasible",
    "InstanceSpec",
    "NoDpPath",
    "OracleConfig",
    "OracleResult",
    "ParetoFront",
    "ParetoPoint",
    "PathGrid",
    "PlanOptions",
    "PlanResult",
    "ResultBundle",
    "Scenario",
    "ScenarioError",
    "SpeedProfile",
    "SpeedTag",
    "VehicleParams",
    "Weights",
    "build_solution",
    "bundle_from_plan",
    "check_assumptions",
    "check_exactness",
    "compute_zy",
    "dominance_filter",
    "dyn_prog",
    "emit_pareto",
    "emit_result",
    "evaluate_objective",
    "feasibility",
    "force",
    "is_feasible_profile",
    "is_interior",
    "lattice_meet_join",
    "load_result",
    "load_scenario",
    "load_scenario_file",
    "plan",
    "random_feasible",
    "random_grid",
    "reference_speeds",
    "resample",
    "solve_exhaustive",
    "solve_grid",
    "solve_point",
    "synthetic_track",
    "sweep",
    "tradeoff_violations",
]
