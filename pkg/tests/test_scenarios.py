from datetime import date, timedelta

import numpy as np
import pytest

from stardom.active_learning import build_committee
from stardom.errors import EligibilityError, UsageError
from stardom.scenarios import (
    PerturbationSpec,
    augment,
    assess,
    confidence_from_spread,
    generate,
    scenarios_to_csv,
)
from stardom.security import TrainingStats
from stardom.series import build_series, featurize

START = date(2026, 1, 5)


def spec(kind, magnitude, start=30, length=7, seed=0):
    return PerturbationSpec(kind, magnitude, start, length, seed)


@pytest.fixture
def base():
    rng = np.random.default_rng(5)
    return build_series("s", START, 50 + rng.uniform(-5, 5, size=80))


class TestGenerate:
    @pytest.mark.parametrize("kind", ["demand_shock", "trend_shift", "season_amplify", "noise_resample"])
    def test_magnitude_zero_is_identity(self, base, kind):
        scenario = generate(base, spec(kind, 0.0), "sc-1")
        assert scenario.perturbed.values == base.values
        assert scenario.window_values == base.values[30:37]

    def test_demand_shock_adds_mean_multiple(self):
        constant = build_series("c", START, [10.0] * 40)
        scenario = generate(constant, spec("demand_shock", 1.0, start=20, length=3), "sc-1")
        assert scenario.window_values == (20.0, 20.0, 20.0)
        assert scenario.perturbed.values[19] == 10.0
        assert scenario.perturbed.values[23] == 10.0

    def test_trend_shift_ramps_from_window_start(self):
        constant = build_series("c", START, [10.0] * 40)
        scenario = generate(constant, spec("trend_shift", 2.0, start=20, length=4), "sc-1")
        assert scenario.window_values == (10.0, 12.0, 14.0, 16.0)

    def test_season_amplify_scales_seasonal_component(self):
        pattern = [40, 50, 60, 70, 80, 30, 20]
        series = build_series("w", START, pattern * 6)
        scenario = generate(series, spec("season_amplify", 1.0, start=14, length=7), "sc-1")
        values = np.asarray(series.values)
        # inside the window the deviation from the weekly moving average doubles
        ma = np.array([np.mean(values[max(0, i - 3): i + 4]) for i in range(len(values))])
        for offset in range(7):
            i = 14 + offset
            expected = max(0.0, values[i] + (values[i] - ma[i]))
            assert scenario.perturbed.values[i] == pytest.approx(expected)

    def test_noise_resample_deterministic_and_clamped(self, base):
        a = generate(base, spec("noise_resample", 1.0, seed=3), "sc-1")
        b = generate(base, spec("noise_resample", 1.0, seed=3), "sc-2")
        assert a.window_values == b.window_values
        assert min(a.perturbed.values) >= 0.0

    def test_window_outside_series_rejected(self, base):
        with pytest.raises(UsageError):
            generate(base, spec("demand_shock", 1.0, start=79, length=5), "sc-1")

    def test_values_clamped_at_zero(self):
        constant = build_series("c", START, [10.0] * 40)
        scenario = generate(constant, spec("demand_shock", -5.0, start=20, length=2), "sc-1")
        assert scenario.window_values == (0.0, 0.0)


class TestConfidence:
    def test_equal_spread_gives_exactly_half(self):
        assert confidence_from_spread(3.0, 3.0) == 0.5

    def test_zero_disagreement_full_confidence(self):
        assert confidence_from_spread(0.0, 5.0) == 1.0

    def test_zero_variance_series_convention(self):
        assert confidence_from_spread(0.0, 0.0) == 1.0
        assert confidence_from_spread(0.1, 0.0) == 0.0

    def test_strictly_decreasing_in_spread(self):
        values = [confidence_from_spread(s, 2.0) for s in (0.0, 1.0, 2.0, 4.0)]
        assert all(a > b for a, b in zip(values, values[1:]))


class TestAssess:
    def make_stats(self, series):
        rows = [featurize(series, d) for i, d in enumerate(series.dates) if i >= 28]
        return TrainingStats.from_data(rows, series.values_array())

    def test_zero_perturbation_tagged_plausible(self, base):
        committee = build_committee(base, "ridge_lags", 5, seed=1)
        stats = self.make_stats(base)
        scenario = generate(base, spec("demand_shock", 0.0, start=40, length=5), "sc-1")
        scenario = assess(scenario, committee, stats)
        assert scenario.tag == "plausible"
        assert scenario.model_confidence > 0.5

    def test_huge_shock_tagged_novel(self, base):
        committee = build_committee(base, "ridge_lags", 5, seed=1)
        stats = self.make_stats(base)
        scenario = generate(base, spec("demand_shock", 10.0, start=40, length=7), "sc-1")
        scenario = assess(scenario, committee, stats)
        # shocked lags sit far outside the training feature distribution
        assert scenario.novelty_score > 5.0

    def test_boundary_confidence_half_proceeds_to_novelty(self, base, monkeypatch):
        committee = build_committee(base, "ridge_lags", 5, seed=1)
        stats = self.make_stats(base)
        scenario = generate(base, spec("demand_shock", 0.0, start=40, length=5), "sc-1")
        import stardom.scenarios as sim

        monkeypatch.setattr(sim, "confidence_from_spread", lambda e, s: 0.5)
        scenario = assess(scenario, committee, stats)
        assert scenario.tag in ("plausible", "novel")  # not low_confidence at exactly 0.5

    def test_series_mismatch_rejected(self, base):
        committee = build_committee(base, "ridge_lags", 5, seed=1)
        stats = self.make_stats(base)
        other = build_series("other", START, [1.0] * 80)
        scenario = generate(other, spec("demand_shock", 0.0, start=40, length=5), "sc-1")
        with pytest.raises(UsageError):
            assess(scenario, committee, stats)


class TestAugment:
    def plausible_scenario(self, base, verdict=None):
        scenario = generate(base, spec("demand_shock", 0.1, start=40, length=7), "sc-1")
        scenario.tag = "plausible"
        scenario.human_verdict = verdict
        return scenario

    def test_without_verdict_appends_nothing(self, base):
        aug = augment(base, [self.plausible_scenario(base)])
        assert aug.appended_points == 0

    def test_confirmed_scenario_appends_window(self, base):
        aug = augment(base, [self.plausible_scenario(base, "plausible")])
        assert aug.appended_points == 7
        assert all(p.weight == 0.5 for p in aug.pseudo)

    def test_implausible_verdict_skipped(self, base):
        aug = augment(base, [self.plausible_scenario(base, "implausible")])
        assert aug.appended_points == 0

    def test_novel_tag_is_eligibility_error(self, base):
        scenario = self.plausible_scenario(base, "plausible")
        scenario.tag = "novel"
        with pytest.raises(EligibilityError):
            augment(base, [scenario])

    def test_gate_soundness_every_pseudo_from_confirmed(self, base):
        confirmed = self.plausible_scenario(base, "plausible")
        pending = generate(base, spec("trend_shift", 0.2, start=50, length=5), "sc-2")
        pending.tag = "plausible"
        aug = augment(base, [confirmed, pending])
        assert {p.scenario_id for p in aug.pseudo} == {"sc-1"}

    def test_custom_weight_validated(self, base):
        with pytest.raises(UsageError):
            augment(base, [], weight=0.0)


class TestCsvExport:
    def test_header_and_rows(self, base):
        scenario = generate(base, spec("demand_shock", 0.5), "sc-1")
        scenario.tag = "plausible"
        scenario.model_confidence = 0.8
        scenario.novelty_score = 1.25
        scenario.human_verdict = "plausible"
        untagged = generate(base, spec("trend_shift", 1.0), "sc-2")
        text = scenarios_to_csv([scenario, untagged])
        lines = text.strip().splitlines()
        assert lines[0] == "scenario_id,kind,magnitude,confidence,novelty,tag,human_verdict"
        assert lines[1] == "sc-1,demand_shock,0.5,0.800000,1.250000,plausible,plausible"
        assert lines[2] == "sc-2,trend_shift,1,,,,"
