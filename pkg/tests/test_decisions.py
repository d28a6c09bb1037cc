from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import three_path_cost
from stardom.decisions import (
    CandidateOption,
    DecisionContext,
    TransportOption,
    enumerate_options,
    recommend,
    score_option,
)
from stardom.errors import DataValidationError, UsageError
from stardom.explain import Explanation
from stardom.forecasting import Forecast


def make_forecast(point, lower=None, upper=None):
    h = len(point)
    if lower is None:
        lower = [max(0.0, p - 1) for p in point]
    if upper is None:
        upper = [p + 1 for p in point]
    return Forecast(
        forecast_id="fc-1", series_id="s", as_of=date(2026, 3, 1), horizon=h,
        model_key="ridge_lags", model_version=1,
        point=tuple(float(p) for p in point),
        lower=tuple(float(p) for p in lower),
        upper=tuple(float(p) for p in upper),
        coverage=0.9,
    )


def make_ctx(on_hand=0.0, holding=1.0, penalty=10.0, options=None, flags=()):
    options = options or [TransportOption("truck", 1, 25.0)]
    return DecisionContext(
        series_id="s", forecast_id="fc-1", on_hand=on_hand,
        unit_holding_cost=holding, unit_stockout_penalty=penalty,
        transport_options=tuple(options), risk_flags=tuple(flags),
    )


class TestEnumerate:
    def test_counts_modes_days_quantities(self):
        fc = make_forecast([1, 1, 1])
        ctx = make_ctx()
        candidates = enumerate_options(ctx, fc)
        # 1 mode, lead 1, horizon 3: ship days {0, 1}; 4 grid quantities
        assert len(candidates) == 8

    def test_quantity_grid_from_summed_forecast(self):
        fc = make_forecast([4, 3, 3])  # total 10
        ctx = make_ctx()
        quantities = sorted({c.quantity for c in enumerate_options(ctx, fc)})
        assert quantities == [0.0, 5.0, 10.0, 15.0]

    def test_horizon_too_short_for_lead(self):
        fc = make_forecast([5])
        ctx = make_ctx(options=[TransportOption("sea", 2, 10.0)])
        with pytest.raises(UsageError):
            enumerate_options(ctx, fc)


class TestScoreOption:
    def test_zero_demand_zero_quantity_costs_nothing(self):
        fc = make_forecast([0, 0, 0], lower=[0, 0, 0], upper=[0, 0, 0])
        ctx = make_ctx()
        cost = score_option(ctx, CandidateOption("truck", 0, 0.0), fc)
        assert cost == 0.0

    def test_positive_quantity_charges_fixed_cost(self):
        fc = make_forecast([0, 0, 0], lower=[0, 0, 0], upper=[0, 0, 0])
        ctx = make_ctx(holding=0.0)
        cost = score_option(ctx, CandidateOption("truck", 0, 5.0), fc)
        assert cost == 25.0  # fixed cost only; no demand, no holding charge

    def test_holding_cost_hand_simulation(self):
        # constant demand 1/day for 5 days, on_hand 5 covers everything, q=0:
        # end-of-day inventories 4,3,2,1,0 -> holding sum 10
        fc = make_forecast([1] * 5, lower=[1] * 5, upper=[1] * 5)
        ctx = make_ctx(on_hand=5.0, holding=2.0)
        cost = score_option(ctx, CandidateOption("truck", 0, 0.0), fc)
        assert cost == pytest.approx(2.0 * 10)

    def test_stockout_on_point_path_weighted_two_quarters(self):
        # demand 10 on day 1 of the point path only; arrival on day 2 is too
        # late, so the point path incurs 10 unmet units weighted 2/4
        fc = make_forecast([0, 10, 0], lower=[0, 0, 0], upper=[0, 10, 0])
        ctx = make_ctx(on_hand=0.0, holding=0.0, penalty=7.0)
        cost = score_option(ctx, CandidateOption("truck", 1, 0.0), fc)
        # upper path also has demand 10 -> weight (2 + 1)/4
        assert cost == pytest.approx(7.0 * 10 * 3 / 4)

    def test_matches_independent_three_path_oracle(self):
        fc = make_forecast([3, 5, 2, 4], lower=[2, 4, 1, 3], upper=[4, 6, 3, 5])
        ctx = make_ctx(on_hand=4.0, holding=0.5, penalty=9.0)
        option = CandidateOption("truck", 1, 6.0)
        expected = three_path_cost(
            list(fc.lower), list(fc.point), list(fc.upper),
            on_hand=4.0, quantity=6.0, arrival_day=2,
            holding=0.5, penalty=9.0, fixed_cost=25.0,
        )
        assert score_option(ctx, option, fc) == pytest.approx(expected, abs=1e-9)

    def test_arrival_beyond_horizon_rejected(self):
        fc = make_forecast([1, 1, 1])
        ctx = make_ctx()
        with pytest.raises(UsageError):
            score_option(ctx, CandidateOption("truck", 2, 1.0), fc)


class TestRecommend:
    def test_ranks_follow_cost_without_gaps(self):
        fc = make_forecast([5, 5, 5, 5])
        ctx = make_ctx()
        options = recommend(ctx, fc)
        assert [o.rank for o in options] == list(range(1, len(options) + 1))
        costs = [o.expected_cost for o in options]
        assert costs == sorted(costs)

    def test_tie_break_smaller_quantity_first(self):
        fc = make_forecast([0, 0, 0], lower=[0, 0, 0], upper=[0, 0, 0])
        ctx = make_ctx(holding=0.0)
        options = recommend(ctx, fc)
        # zero demand: every q=0 option costs 0; earliest ship day wins next
        assert options[0].quantity == 0.0
        assert options[0].ship_day == 0

    def test_dominated_mode_ranked_lower(self):
        fc = make_forecast([5, 5, 5])
        ctx = make_ctx(options=[
            TransportOption("cheap", 1, 10.0),
            TransportOption("pricey", 1, 90.0),
        ])
        options = recommend(ctx, fc)
        by_key = {
            (o.mode, o.ship_day, o.quantity): o.rank
            for o in options
        }
        for (mode, day, q), rank in by_key.items():
            if mode == "cheap" and q > 0:
                assert rank < by_key[("pricey", day, q)]

    def test_directive_cites_top_attribution_with_sign(self):
        fc = make_forecast([5, 5, 5])
        ctx = make_ctx()
        explanation = Explanation(
            explanation_id="ex-1", forecast_id="fc-1", instance={},
            intercept=0.0, attributions=(("lag_7", -2.5), ("lag_1", 1.0)),
            fidelity_r2=0.99, kernel_sigma=1.0, n_samples=100, seed=0,
            audience_role="planner", redacted_features=(),
        )
        options = recommend(ctx, fc, explanation)
        assert "lag_7" in options[0].directive_text
        assert "(-)" in options[0].directive_text
        assert "lag_7" not in options[1].directive_text

    def test_no_explanation_omits_feature_clause(self):
        fc = make_forecast([5, 5, 5])
        options = recommend(make_ctx(), fc)
        assert "driven by" not in options[0].directive_text

    def test_risk_flags_attached_verbatim(self):
        fc = make_forecast([5, 5, 5])
        ctx = make_ctx(flags=("scenario:sc-1:novel",))
        options = recommend(ctx, fc)
        assert all(o.risk_flags == ("scenario:sc-1:novel",) for o in options)

    def test_deterministic(self):
        fc = make_forecast([5, 3, 4])
        ctx = make_ctx()
        a = [o.to_payload() for o in recommend(ctx, fc)]
        b = [o.to_payload() for o in recommend(ctx, fc)]
        assert a == b

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 1000))
    def test_rank_cost_consistency_random_contexts(self, seed):
        rng = np.random.default_rng(seed)
        h = int(rng.integers(3, 8))
        point = rng.uniform(0, 20, size=h)
        fc = make_forecast(point, lower=np.maximum(0, point - 2), upper=point + 2)
        ctx = make_ctx(
            on_hand=float(rng.uniform(0, 30)),
            holding=float(rng.uniform(0, 3)),
            penalty=float(rng.uniform(0, 30)),
            options=[TransportOption("m1", int(rng.integers(0, 2)), float(rng.uniform(0, 50))),
                     TransportOption("m2", int(rng.integers(0, 2)), float(rng.uniform(0, 50)))],
        )
        options = recommend(ctx, fc)
        costs = [o.expected_cost for o in options]
        assert costs == sorted(costs)
        assert [o.rank for o in options] == list(range(1, len(options) + 1))

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 500))
    def test_penalty_dominance_weak_monotonicity(self, seed):
        rng = np.random.default_rng(seed)
        point = rng.uniform(0, 15, size=5)
        fc = make_forecast(point, lower=np.maximum(0, point - 2), upper=point + 2)

        def cost_gap(penalty):
            ctx = make_ctx(on_hand=0.0, holding=1.0, penalty=penalty)
            hi = score_option(ctx, CandidateOption("truck", 0, float(sum(point))), fc)
            lo = score_option(ctx, CandidateOption("truck", 0, 0.0), fc)
            return hi - lo

        # raising the stockout penalty never worsens higher-q relative to lower-q
        assert cost_gap(50.0) <= cost_gap(5.0) + 1e-9


class TestValidation:
    def test_context_needs_transport_option(self):
        with pytest.raises(DataValidationError):
            DecisionContext("s", "fc-1", 0.0, 1.0, 1.0, ())

    def test_negative_quantity_rejected(self):
        fc = make_forecast([1, 1, 1])
        with pytest.raises(DataValidationError):
            score_option(make_ctx(), CandidateOption("truck", 0, -1.0), fc)
