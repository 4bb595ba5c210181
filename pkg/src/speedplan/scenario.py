"""Scenario documents (YAML), resampling onto the uniform grid, and result serialization.

A scenario looks like::

    units: {slope: percent, speed: km/h}   # optional; SI (rad, m/s) by default
    vehicle: {M: 1365, P_max: 87000, eta: 0.7, c: 0.007, Gamma: 0.399, mu: 0.7}
    path:
      s: [0, 200, 400]          # m, strictly increasing
      slope: [0, 2, 2]          # per sample, in units.slope
      v_max: [150, 150, 90]     # per sample, in units.speed
    h: 0.2
    v_in: 0                     # or w_in / w_fin in m^2/s^2
    v_fin: 0
    lambda: 5.0e-4
    solver: {epsilon: 1.0e-9, max_iters: 100000, tol_feas: 1.0e-6, epsilon_speed: 1.0e-3}
    oracle: {levels_per_step: 400, refine_rounds: 2}

Omitted blocks take the defaults shown (vehicle: the bundled Fiat 500e preset).
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
import yaml

from .dp import PlanOptions, PlanResult
from .model import FIAT_500E, EffectiveLimits, PathGrid, VehicleParams, Weights
from .oracle import OracleConfig
from .pareto import DEFAULT_LAMBDA, ParetoFront

SLOPE_UNITS = {"rad", "deg", "percent"}
SPEED_UNITS = {"m/s", "km/h"}


class ScenarioError(ValueError):
    """Malformed scenario document; the message names the field and line."""


@dataclass(frozen=True, eq=False)
class Scenario:
    vehicle: VehicleParams
    s: np.ndarray
    alpha: np.ndarray
    v_max: np.ndarray
    h: float
    w_in: float
    w_fin: float
    weights: Weights
    options: PlanOptions = field(default_factory=PlanOptions)
    oracle: OracleConfig = field(default_factory=OracleConfig)

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.vehicle == other.vehicle
            and all(np.array_equal(getattr(self, k), getattr(other, k)) for k in ("s", "alpha", "v_max"))
            and (self.h, self.w_in, self.w_fin) == (other.h, other.w_in, other.w_fin)
            and self.weights == other.weights
            and self.options == other.options
            and self.oracle == other.oracle
        )


# --------------------------------------------------------------------------
# loading


class _LineLoader(yaml.SafeLoader):
    """Records the source line of every mapping key."""


def _construct_mapping(loader, node, deep=False):
    mapping = _LineDict(yaml.SafeLoader.construct_mapping(loader, node, deep=True))
    for key_node, _ in node.value:
        mapping.lines[loader.construct_object(key_node)] = key_node.start_mark.line + 1
    return mapping


class _LineDict(dict):
    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.lines = {}


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def _where(doc, key, prefix=""):
    line = getattr(doc, "lines", {}).get(key)
    name = f"{prefix}{key}"
    return f"field '{name}'" + (f" (line {line})" if line else "")


def _number(doc, key, prefix="", default=None, required=False):
    if key not in doc:
        if required:
            raise ScenarioError(f"missing {_where(doc, key, prefix)}")
        return default
    val = _as_float(doc[key])
    if val is None:
        raise ScenarioError(f"{_where(doc, key, prefix)} must be a number, got {doc[key]!r}")
    return val


def _as_float(val):
    # YAML 1.1 reads exponent literals without a dot (1e-9) as strings
    if isinstance(val, bool):
        return None
    if isinstance(val, (int, float)):
        return float(val)
    if isinstance(val, str):
        try:
            return float(val)
        except ValueError:
            return None
    return None


def _vector(doc, key, prefix=""):
    if key not in doc:
        raise ScenarioError(f"missing {_where(doc, key, prefix)}")
    val = doc[key]
    out = [_as_float(x) for x in val] if isinstance(val, list) else [None]
    if any(x is None for x in out):
        raise ScenarioError(f"{_where(doc, key, prefix)} must be a list of numbers")
    return np.array(out, dtype=float)


def _block(doc, key):
    val = doc.get(key, {})
    if val is None:
        val = {}
    if not isinstance(val, dict):
        raise ScenarioError(f"{_where(doc, key)} must be a mapping")
    return val


def _parse_dataclass(cls, doc, key, base):
    blk = _block(doc, key)
    known = {f.name for f in fields(cls)}
    unknown = set(blk) - known
    if unknown:
        raise ScenarioError(f"unknown key(s) {sorted(unknown)} in {_where(doc, key)}")
    kwargs = asdict(base)
    for k in blk:
        if isinstance(getattr(base, k), int) and not isinstance(getattr(base, k), bool):
            v = blk[k]
            if isinstance(v, bool) or not isinstance(v, int):
                raise ScenarioError(f"{_where(blk, k, key + '.')} must be an integer")
            kwargs[k] = v
        elif isinstance(getattr(base, k), bool):
            if not isinstance(blk[k], bool):
                raise ScenarioError(f"{_where(blk, k, key + '.')} must be true or false")
            kwargs[k] = blk[k]
        else:
            kwargs[k] = _number(blk, k, key + ".")
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ScenarioError(f"{_where(doc, key)}: {exc}") from None


def _speed_field(doc, name, speed_div):
    """Boundary speed from ``v_<name>`` (speed units) or ``w_<name>`` (m^2/s^2)."""
    v_key, w_key = f"v_{name}", f"w_{name}"
    if v_key in doc and w_key in doc:
        raise ScenarioError(f"give only one of {v_key} and {w_key}")
    if w_key in doc:
        return _number(doc, w_key)
    v = _number(doc, v_key, default=0.0) / speed_div
    return 0.5 * v * v


def load_scenario(source: str) -> Scenario:
    """Parse a YAML scenario document (text, not a path)."""
    try:
        doc = yaml.load(source, Loader=_LineLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioError(f"YAML parse error{where}: {getattr(exc, 'problem', exc)}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a mapping")
    known = {"units", "vehicle", "path", "h", "v_in", "v_fin", "w_in", "w_fin", "lambda", "solver", "oracle"}
    unknown = set(doc) - known
    if unknown:
        raise ScenarioError(f"unknown top-level key(s): {sorted(unknown)}")

    units = _block(doc, "units")
    slope_unit = units.get("slope", "rad")
    speed_unit = units.get("speed", "m/s")
    if slope_unit not in SLOPE_UNITS:
        raise ScenarioError(f"{_where(units, 'slope', 'units.')}: unknown unit {slope_unit!r}, expected one of {sorted(SLOPE_UNITS)}")
    if speed_unit not in SPEED_UNITS:
        raise ScenarioError(f"{_where(units, 'speed', 'units.')}: unknown unit {speed_unit!r}, expected one of {sorted(SPEED_UNITS)}")
    speed_div = 3.6 if speed_unit == "km/h" else 1.0

    vehicle = _parse_dataclass(VehicleParams, doc, "vehicle", FIAT_500E)

    if "path" not in doc:
        raise ScenarioError("missing field 'path'")
    path = _block(doc, "path")
    s = _vector(path, "s", "path.")
    slope = _vector(path, "slope", "path.")
    v_max = _vector(path, "v_max", "path.") / speed_div
    if s.size < 2:
        raise ScenarioError(f"{_where(path, 's', 'path.')} needs at least 2 samples")
    if slope.size != s.size or v_max.size != s.size:
        raise ScenarioError("path.s, path.slope and path.v_max must have equal length")
    if np.any(np.diff(s) <= 0):
        bad = int(np.flatnonzero(np.diff(s) <= 0)[0]) + 1
        raise ScenarioError(f"{_where(path, 's', 'path.')} must be strictly increasing (sample {bad})")
    if np.any(v_max < 0):
        raise ScenarioError(f"{_where(path, 'v_max', 'path.')} must be non-negative")
    if slope_unit == "deg":
        alpha = np.deg2rad(slope)
    elif slope_unit == "percent":
        alpha = np.arctan(slope / 100.0)
    else:
        alpha = slope

    h = _number(doc, "h", default=0.2)
    if not h > 0:
        raise ScenarioError(f"{_where(doc, 'h')} must be positive")
    lam = _number(doc, "lambda", default=DEFAULT_LAMBDA)
    if lam < 0:
        raise ScenarioError(f"{_where(doc, 'lambda')} must be non-negative")
    return Scenario(
        vehicle=vehicle,
        s=s,
        alpha=alpha,
        v_max=v_max,
        h=h,
        w_in=_speed_field(doc, "in", speed_div),
        w_fin=_speed_field(doc, "fin", speed_div),
        weights=Weights(lam),
        options=_parse_dataclass(PlanOptions, doc, "solver", PlanOptions()),
        oracle=_parse_dataclass(OracleConfig, doc, "oracle", OracleConfig()),
    )


def load_scenario_file(path: str) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            return load_scenario(fh.read())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path!r}: {exc.strerror}") from None


def dump_scenario(sc: Scenario) -> str:
    """SI-unit YAML echo of a scenario; ``load_scenario`` inverts it exactly."""
    doc = {
        "units": {"slope": "rad", "speed": "m/s"},
        "vehicle": asdict(sc.vehicle),
        "path": {"s": sc.s.tolist(), "slope": sc.alpha.tolist(), "v_max": sc.v_max.tolist()},
        "h": sc.h,
        "w_in": sc.w_in,
        "w_fin": sc.w_fin,
        "lambda": sc.weights.lam,
        "solver": asdict(sc.options),
        "oracle": asdict(sc.oracle),
    }
    return yaml.safe_dump(doc, sort_keys=False)


def resample(sc: Scenario) -> tuple[VehicleParams, PathGrid, EffectiveLimits]:
    """Uniform grid with ``floor(L/h) + 1`` points; slope and speed limit interpolated linearly.

    The speed limit is interpolated in speed and converted to ``w`` afterwards.
    Each step takes the slope at its start point.
    """
    length = float(sc.s[-1] - sc.s[0])
    if sc.h > length:
        raise ScenarioError(f"h={sc.h} exceeds the path length {length}")
    n = int(math.floor(length / sc.h + 1e-9)) + 1
    x = sc.s[0] + sc.h * np.arange(n)
    alpha = np.interp(x[:-1], sc.s, sc.alpha)
    v = np.interp(x, sc.s, sc.v_max)
    w_max = 0.5 * v * v
    try:
        grid = PathGrid(sc.h, alpha, w_max, sc.w_in, sc.w_fin)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    return sc.vehicle, grid, grid.limits()


# --------------------------------------------------------------------------
# results


@dataclass(frozen=True, eq=False)
class ResultBundle:
    s: np.ndarray
    w: np.ndarray
    v: np.ndarray
    f: np.ndarray
    y: np.ndarray
    z: np.ndarray
    objective: dict
    assumptions: dict
    timings: dict
    metadata: dict

    @property
    def n(self) -> int:
        return int(self.w.size)


def _finite_or_none(x):
    x = float(x)
    return x if math.isfinite(x) else None


def bundle_from_plan(result: PlanResult, params: VehicleParams, grid: PathGrid, s0: float = 0.0,
                     lam: float | None = None) -> ResultBundle:
    p = result.profile
    rep = result.assumptions
    assumptions = {}
    if rep is not None:
        assumptions = {
            "assumption1": rep.assumption1,
            "cond1": rep.cond1_holds,
            "cond2": bool(np.all(rep.cond2_holds)),
            "cond3": bool(np.all(rep.cond3_holds)),
            "asscomb": rep.asscomb_holds,
            "a1_min_margin": _finite_or_none(np.min(rep.margins["a1"])),
            "cond1_margin": _finite_or_none(rep.margins["cond1"]),
            "asscomb_margin": _finite_or_none(rep.margins["asscomb"]),
        }
    y = result.bounds.y if result.bounds is not None else np.full(grid.n, np.nan)
    z = result.bounds.z if result.bounds is not None else np.full(grid.n, np.nan)
    return ResultBundle(
        s=s0 + grid.h * np.arange(grid.n),
        w=np.array(p.w),
        v=np.array(p.v),
        f=np.array(p.f),
        y=np.array(y),
        z=np.array(z),
        objective={
            "objective_s": p.objective,
            "travel_time_s": p.travel_time,
            "energy_J": p.energy,
            "specific_energy_J_per_kg": p.energy / params.M,
            "dp_value": result.dp_value,
        },
        assumptions=assumptions,
        timings={"wall_time_s": result.wall_time},
        metadata={
            "n": grid.n,
            "h": grid.h,
            "lambda": lam,
            "bound_iterations": result.bounds.iterations if result.bounds is not None else None,
            "states_expanded": result.states_expanded,
        },
    )


_ARRAYS = ("s", "w", "v", "f", "y", "z")


def _fmt(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.9g}"


def emit_result(bundle: ResultBundle, fmt: str = "json") -> str:
    """Serialize a result bundle.

    JSON keeps full precision so that :func:`load_result` round-trips exactly;
    CSV rows use 9 significant digits.
    """
    if fmt == "json":
        doc = {k: getattr(bundle, k).tolist() for k in _ARRAYS}
        for k in ("objective", "assumptions", "timings", "metadata"):
            doc[k] = getattr(bundle, k)
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["s", "w", "v", "f", "y", "z"])
        for i in range(bundle.n):
            f = bundle.f[i] if i < bundle.f.size else None
            wr.writerow([_fmt(bundle.s[i]), _fmt(bundle.w[i]), _fmt(bundle.v[i]), _fmt(f), _fmt(bundle.y[i]), _fmt(bundle.z[i])])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def load_result(text: str) -> ResultBundle:
    doc = json.loads(text)
    arrays = {k: np.array(doc[k], dtype=float) for k in _ARRAYS}
    return ResultBundle(**arrays, objective=doc["objective"], assumptions=doc["assumptions"],
                        timings=doc["timings"], metadata=doc["metadata"])


def emit_pareto(front: ParetoFront, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["lambda", "time_s", "energy_J", "specific_energy_J_per_kg", "feasible"])
        for p in front.points:
            wr.writerow([_fmt(p.lam), _fmt(p.travel_time), _fmt(p.energy), _fmt(p.specific_energy),
                         "true" if p.feasible else "false"])
        return buf.getvalue()
    if fmt == "json":
        pts = [{k: (_finite_or_none(v) if isinstance(v, float) else v) for k, v in asdict(p).items()} for p in front.points]
        return json.dumps({"points": pts}, indent=2, allow_nan=False) + "\n"
    raise ValueError(f"unknown format {fmt!r}")
