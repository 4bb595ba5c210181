import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from speedplan.instances import InstanceSpec, random_feasible, synthetic_track
from speedplan.model import FIAT_500E
from speedplan.pareto import (
    DEFAULT_LAMBDA,
    ParetoFront,
    ParetoPoint,
    dominance_filter,
    dominates,
    is_interior,
    lambda_grid,
    solve_point,
    sweep,
    tradeoff_violations,
)

from conftest import flat_grid


def pt(t, e, lam=0.0, feasible=True):
    return ParetoPoint(lam, t, e, e / 1365.0, t + lam * e, feasible)


@pytest.fixture(scope="module")
def track_front():
    return sweep(FIAT_500E, synthetic_track(), samples=45)


class TestLambdaGrid:
    def test_defaults(self):
        lams = lambda_grid(1e-6, 1.0, 45)
        assert lams.size == 46 and lams[0] == 0.0
        assert lams[1] == pytest.approx(1e-6) and lams[-1] == pytest.approx(1.0)
        np.testing.assert_allclose(np.diff(np.log10(lams[1:])), 6 / 44)

    def test_linear_and_no_zero(self):
        lams = lambda_grid(0.0, 1.0, 5, log_spaced=False, include_zero=True)
        np.testing.assert_allclose(lams, [0, 0.25, 0.5, 0.75, 1.0])
        assert lambda_grid(1e-3, 1.0, 3, include_zero=False).size == 3

    @pytest.mark.parametrize("args", [(1.0, 1.0, 5), (-1.0, 1.0, 5), (1e-3, 1.0, 1), (0.0, 1.0, 5)])
    def test_rejects(self, args):
        with pytest.raises(ValueError):
            lambda_grid(*args)


class TestDominance:
    def test_single(self):
        p = pt(1, 1)
        assert dominance_filter([p]) == [p]

    def test_duplicates_keep_one(self):
        a, b = pt(1, 2, lam=0.1), pt(1, 2, lam=0.2)
        assert dominance_filter([a, b]) == [a]

    def test_triple(self):
        a, b, c = pt(1, 3), pt(2, 1), pt(2, 3)
        assert dominance_filter([a, b, c]) == [a, b]
        assert dominates(a, c) and not dominates(a, b) and not dominates(a, a)

    def test_infeasible_excluded(self):
        bad = ParetoPoint(0.1, math.nan, math.nan, math.nan, math.nan, False, "infeasible")
        assert dominance_filter([pt(1, 1), bad]) == [pt(1, 1)]

    @given(st.lists(st.tuples(st.floats(0, 10), st.floats(-10, 10)), max_size=30))
    def test_idempotent_and_mutually_non_dominated(self, pairs):
        pts = [pt(t, e) for t, e in pairs]
        kept = dominance_filter(pts)
        assert dominance_filter(kept) == kept
        assert not any(dominates(q, p) for p in kept for q in kept)
        for p in pts:
            assert p in kept or any(dominates(q, p) or (q.travel_time, q.energy) == (p.travel_time, p.energy) for q in kept)


class TestSweep:
    def test_points_sorted_and_specific_energy(self, track_front):
        lams = [p.lam for p in track_front.points]
        assert lams == sorted(lams) and len(track_front) == 46
        for p in track_front.feasible:
            assert p.specific_energy == pytest.approx(p.energy / FIAT_500E.M, rel=1e-15)
            assert p.objective == pytest.approx(p.travel_time + p.lam * p.energy, rel=1e-12)

    def test_two_weights_trade_off(self):
        rng = np.random.default_rng(40)
        for _ in range(5):
            g, _ = random_feasible(rng, InstanceSpec(n=500))
            lo, hi = solve_point(FIAT_500E, g, 1e-4), solve_point(FIAT_500E, g, 2e-3)
            assert lo.travel_time <= hi.travel_time * (1 + 1e-2)
            assert lo.energy >= hi.energy - 1e-2 * (abs(lo.objective) + abs(hi.objective)) / (2e-3 - 1e-4)

    def test_trade_off_bounds_hold(self, track_front):
        assert tradeoff_violations(track_front) == []

    def test_default_weight_is_interior(self, track_front):
        # 5e-4 falls between two log samples
        p = solve_point(FIAT_500E, synthetic_track(), DEFAULT_LAMBDA)
        assert p.feasible and is_interior(p, track_front.points)

    def test_failures_flagged_not_dropped(self):
        g = flat_grid(5, w_in=0.0, w_fin=500.0)
        front = sweep(FIAT_500E, g, 1e-4, 1e-2, 3)
        assert len(front) == 4
        assert all(not p.feasible and p.status == "infeasible" for p in front.points)
        assert front.feasible == ()


class TestViolations:
    def test_detects_reversed_order(self):
        a = ParetoPoint(1e-3, 10.0, 100.0, 0.0, 10.1, True)
        b = ParetoPoint(2e-3, 9.0, 200.0, 0.0, 9.4, True)
        kinds = {v[2] for v in tradeoff_violations([a, b], rel_tol=1e-6)}
        assert kinds == {"energy", "time"}

    def test_consistent_pair(self):
        a = ParetoPoint(1e-3, 9.0, 200.0, 0.0, 9.2, True)
        b = ParetoPoint(2e-3, 10.0, 100.0, 0.0, 10.2, True)
        assert tradeoff_violations(ParetoFront((b, a)), rel_tol=1e-6) == []
