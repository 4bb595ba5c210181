import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from speedplan.model import (
    FIAT_500E,
    EffectiveLimits,
    PathGrid,
    VehicleParams,
    Weights,
    check_assumptions,
    evaluate_objective,
    force,
    forces,
    objective_from_stage_sum,
    reference_speeds,
    stage_cost_sum,
)

from conftest import flat_grid, no_resistance

# reference values computed by hand from the Fiat 500e data
GAMMA = 0.399 / 1365.0
FORCE_AT_100 = GAMMA * 100 + 9.81 * 0.007  # 0.0979008
COAST_FROM_100 = (1 - 0.2 * GAMMA) * 100 - 0.2 * 9.81 * 0.007  # 99.98042


class TestVehicleParams:
    def test_gamma_is_drag_per_mass(self):
        assert FIAT_500E.gamma == pytest.approx(2.923076923e-4, rel=1e-9)

    @pytest.mark.parametrize(
        "kw",
        [dict(M=0), dict(P_max=-1), dict(eta=1.2), dict(eta=-0.1), dict(c=-1e-3), dict(Gamma=-1), dict(mu=0), dict(g=0)],
    )
    def test_rejects_invalid(self, kw):
        base = dict(M=1365.0, P_max=87000.0, eta=0.7, c=0.007, Gamma=0.399, mu=0.7)
        base.update(kw)
        with pytest.raises(ValueError):
            VehicleParams(**base)


class TestPathGrid:
    def test_shapes_validated(self):
        with pytest.raises(ValueError):
            PathGrid(0.2, np.zeros(3), np.full(3, 10.0), 0, 0)
        with pytest.raises(ValueError):
            PathGrid(0.2, np.zeros(0), np.full(1, 10.0), 0, 0)

    def test_boundary_speed_in_range(self):
        with pytest.raises(ValueError):
            PathGrid(0.2, np.zeros(2), np.full(3, 10.0), 11.0, 0)
        with pytest.raises(ValueError):
            PathGrid(0.2, np.zeros(2), np.full(3, 10.0), 0, -1.0)

    def test_slope_and_step_validated(self):
        with pytest.raises(ValueError):
            PathGrid(0.2, np.array([math.pi / 2, 0]), np.full(3, 10.0), 0, 0)
        with pytest.raises(ValueError):
            PathGrid(0.0, np.zeros(2), np.full(3, 10.0), 0, 0)

    def test_arrays_are_read_only(self):
        g = flat_grid(4)
        with pytest.raises(ValueError):
            g.alpha[0] = 1.0

    def test_effective_limits_pin_the_ends(self):
        g = PathGrid(0.2, np.zeros(3), np.array([5.0, 6.0, 7.0, 8.0]), 1.0, 2.0)
        lim = EffectiveLimits.from_grid(g)
        np.testing.assert_array_equal(lim.w_min_eff, [1.0, 0.0, 0.0, 2.0])
        np.testing.assert_array_equal(lim.w_max_eff, [1.0, 6.0, 7.0, 2.0])


class TestForce:
    def test_constant_speed_no_resistance(self):
        assert force(100, 100, 0, no_resistance(), flat_grid(3)) == 0.0

    def test_fiat_cruise(self):
        assert force(100, 100, 0, FIAT_500E, flat_grid(3)) == pytest.approx(0.097900, abs=5e-6)
        assert force(100, 100, 0, FIAT_500E, flat_grid(3)) == pytest.approx(FORCE_AT_100, rel=1e-12)

    def test_coasting_step_is_zero_force(self):
        assert force(100, 99.9804, 0, FIAT_500E, flat_grid(3)) == pytest.approx(0.0, abs=1e-3)
        assert force(100, COAST_FROM_100, 0, FIAT_500E, flat_grid(3)) == pytest.approx(0.0, abs=1e-12)

    def test_index_checked(self):
        with pytest.raises(IndexError):
            force(1, 1, 2, FIAT_500E, flat_grid(3))
        with pytest.raises(ValueError):
            force(-1, 1, 0, FIAT_500E, flat_grid(3))

    @given(
        w=st.tuples(st.floats(0, 800), st.floats(0, 800)),
        w2=st.tuples(st.floats(0, 800), st.floats(0, 800)),
        a=st.floats(0, 3),
        b=st.floats(0, 3),
    )
    def test_affine_in_the_transition(self, w, w2, a, b):
        # force is affine, so subtracting the zero-speed part makes it linear
        g = flat_grid(3, alpha=0.05)
        p = FIAT_500E
        base = force(0, 0, 0, p, g)
        lin = lambda u, v: force(u, v, 0, p, g) - base
        lhs = lin(a * w[0] + b * w2[0], a * w[1] + b * w2[1])
        rhs = a * lin(*w) + b * lin(*w2)
        assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(rhs)) + 1e-9)


class TestObjective:
    def test_single_step_time_only(self):
        g = flat_grid(2, 100, 100)
        prof = evaluate_objective([100, 100], FIAT_500E, g, Weights(0))
        assert prof.objective == pytest.approx(0.2 / math.sqrt(200), rel=1e-12)

    def test_constant_speed_time(self):
        prof = evaluate_objective([100] * 3, no_resistance(), flat_grid(3, 100, 100), Weights(0))
        assert prof.objective == pytest.approx(0.028284, abs=5e-7)

    def test_fiat_three_points(self):
        prof = evaluate_objective([100] * 3, FIAT_500E, flat_grid(3, 100, 100), Weights(5e-4))
        assert prof.travel_time == pytest.approx(0.028284, abs=5e-7)
        assert prof.energy == pytest.approx(53.45, abs=5e-3)
        assert prof.objective == pytest.approx(0.055011, abs=5e-7)
        np.testing.assert_allclose(prof.f, [FORCE_AT_100] * 2, rtol=1e-12)

    def test_zero_speed_is_clamped(self):
        prof = evaluate_objective([0, 0], FIAT_500E, flat_grid(2), Weights(0))
        assert prof.travel_time == pytest.approx(0.2 / math.sqrt(2e-3), rel=1e-12)

    def test_braking_regenerates(self):
        g = flat_grid(2, 100, 90)
        prof = evaluate_objective([100, 90], FIAT_500E, g, Weights(1.0))
        f = (90 - 100) / 0.2 + FORCE_AT_100
        assert prof.energy == pytest.approx(0.2 * 1365 * 0.7 * f, rel=1e-12)

    def test_rejects_wrong_length_and_negative(self):
        with pytest.raises(ValueError):
            evaluate_objective([1, 2], FIAT_500E, flat_grid(3), Weights(0))
        with pytest.raises(ValueError):
            evaluate_objective([0, -1, 0], FIAT_500E, flat_grid(3), Weights(0))

    @given(st.lists(st.floats(1e-3, 800), min_size=5, max_size=5), st.floats(0, 1e-2))
    def test_objective_decomposes(self, w, lam):
        g = PathGrid(0.2, [0.03, -0.02, 0.0, 0.1], [868.0] * 5, w[0], w[-1])
        prof = evaluate_objective(w, FIAT_500E, g, Weights(lam))
        assert prof.objective == pytest.approx(lam * prof.energy + prof.travel_time, rel=1e-12)
        np.testing.assert_allclose(prof.f, forces(w, FIAT_500E, g), rtol=0, atol=0)

    @given(st.lists(st.floats(1e-3, 800), min_size=6, max_size=6), st.floats(0, 1e-2))
    def test_stage_sum_differs_by_a_constant(self, w, lam):
        g = PathGrid(0.2, [0.03, -0.02, 0.0, 0.1, -0.05], [868.0] * 6, w[0], w[-1])
        direct = evaluate_objective(w, FIAT_500E, g, Weights(lam)).objective
        staged = objective_from_stage_sum(stage_cost_sum(w, FIAT_500E, g, Weights(lam)), FIAT_500E, g, Weights(lam))
        assert staged == pytest.approx(direct, rel=1e-10, abs=1e-10)


class TestReferenceSpeeds:
    def test_full_regeneration_makes_them_equal(self):
        p = VehicleParams(M=1365.0, P_max=87000.0, eta=1.0, c=0.007, Gamma=0.399, mu=0.7)
        wp, wm = reference_speeds(p, Weights(5e-4))
        assert wp == wm

    def test_fiat_values(self):
        wp, wm = reference_speeds(FIAT_500E, Weights(5e-4))
        k = 2 * 5e-4 * 1365 * GAMMA
        assert wp == pytest.approx(k ** (-2 / 3), rel=1e-12)
        assert wm == pytest.approx((0.7 * k) ** (-2 / 3), rel=1e-12)
        # published rounding of the same quantities
        assert wp == pytest.approx(184.4, abs=0.2)
        assert wm == pytest.approx(234.1, abs=0.2)

    def test_unbounded_cases(self):
        assert reference_speeds(FIAT_500E, Weights(0)) == (math.inf, math.inf)
        p = VehicleParams(M=1365.0, P_max=87000.0, eta=0.0, c=0.007, Gamma=0.399, mu=0.7)
        wp, wm = reference_speeds(p, Weights(1e-3))
        assert math.isfinite(wp) and wm == math.inf
        wp, wm = reference_speeds(no_resistance(), Weights(1e-3))
        assert wp == wm == math.inf

    @given(st.floats(0.01, 1.0))
    def test_ordering_and_monotone_in_weight(self, eta):
        p = VehicleParams(M=1365.0, P_max=87000.0, eta=eta, c=0.007, Gamma=0.399, mu=0.7)
        lams = np.logspace(-6, 0, 25)
        pairs = np.array([reference_speeds(p, Weights(l)) for l in lams])
        assert np.all(pairs[:, 0] <= pairs[:, 1] * (1 + 1e-12))
        assert np.all(np.diff(pairs[:, 0]) < 0) and np.all(np.diff(pairs[:, 1]) < 0)


class TestAssumptions:
    def test_fiat_margins(self):
        rep = check_assumptions(FIAT_500E, flat_grid(10), Weights(5e-4))
        assert np.all(rep.margins["a1"] == pytest.approx(0.98400, abs=5e-6))
        assert rep.margins["cond1"] == pytest.approx(0.99740, abs=5e-6)
        assert rep.margins["asscomb"] == pytest.approx(-1.49971, abs=5e-6)
        assert rep.assumption1 and rep.cond1_holds and rep.asscomb_holds

    def test_booleans_match_margin_signs(self):
        g = PathGrid(0.2, np.linspace(-0.3, 0.3, 9), np.full(10, 868.0), 0, 0)
        rep = check_assumptions(FIAT_500E, g, Weights(1e-3))
        np.testing.assert_array_equal(rep.a1_holds, rep.margins["a1"] >= 0)
        np.testing.assert_array_equal(rep.cond2_holds, rep.margins["cond2"] > 0)
        np.testing.assert_array_equal(rep.cond3_holds, rep.margins["cond3"] < 0)
        assert rep.cond1_holds == (rep.margins["cond1"] > 0)

    def test_cond2_restricted_by_upper_bound(self):
        g = PathGrid(0.2, np.full(4, 0.4), np.full(5, 868.0), 0, 0)
        wp, _ = reference_speeds(FIAT_500E, Weights(5e-4))
        assert not np.all(check_assumptions(FIAT_500E, g, Weights(5e-4)).cond2_holds)
        low_z = np.full(5, wp / 2)
        assert np.all(check_assumptions(FIAT_500E, g, Weights(5e-4), bounds_z=low_z).cond2_holds)

    def test_failures_listed(self):
        # full regeneration breaks the kink condition for any step
        p = VehicleParams(M=1365.0, P_max=87000.0, eta=1.0, c=0.007, Gamma=0.399, mu=0.7)
        rep = check_assumptions(p, flat_grid(5), Weights(5e-4))
        text = " ".join(rep.failures())
        assert "eta" in text and not rep.all_hold

    @given(st.floats(0.05, 50.0), st.floats(0.01, 1.5), st.floats(5e3, 5e5))
    def test_step_condition_monotone_in_h(self, h, mu, power):
        # halving the step never breaks the step-size condition
        p = VehicleParams(M=1365.0, P_max=power, eta=0.7, c=0.007, Gamma=0.399, mu=mu)
        holds = lambda step: check_assumptions(p, flat_grid(3, h=step), Weights(0)).assumption1
        if holds(h):
            assert holds(h / 2)
