"""What-if scenario generation around a demand series.

A perturbation spec rewrites a window of the series (demand shock, trend
shift, seasonal amplification, or residual resampling); assessment scores the
model's confidence on the rewritten window via committee disagreement and its
novelty via the evasion detector, and tags the scenario plausible, novel, or
low-confidence. Only plausible scenarios that a human has confirmed may feed
training as half-weight pseudo-observations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from typing import Sequence

import numpy as np

from .active_learning import Committee
from .errors import EligibilityError, HistoryError, UsageError
from .security import TrainingStats, detect_evasion
from .series import MIN_FEATURE_HISTORY, FeatureVector, TimeSeries, featurize

PERTURBATION_KINDS = ("demand_shock", "trend_shift", "season_amplify", "noise_resample")
TAGS = ("plausible", "novel", "low_confidence")
VERDICTS = ("plausible", "implausible")

DEFAULT_AUGMENT_WEIGHT = 0.5
DEFAULT_NOVELTY_THRESHOLD = 5.0
LOW_CONFIDENCE_BELOW = 0.5


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str
    magnitude: float
    window_start: int  # day offset from the series start
    window_len: int
    seed: int = 0

    def __post_init__(self):
        if self.kind not in PERTURBATION_KINDS:
            raise UsageError(f"unknown perturbation kind {self.kind!r}")
        if self.window_len < 1:
            raise UsageError("window length must be at least 1 day")
        if not math.isfinite(self.magnitude):
            raise UsageError("magnitude must be finite")


@dataclass
class Scenario:
    scenario_id: str
    series_id: str
    spec: PerturbationSpec
    window_dates: tuple[date, ...]
    window_values: tuple[float, ...]
    perturbed: TimeSeries
    forecast_id: str | None = None
    model_confidence: float | None = None
    novelty_score: float | None = None
    tag: str | None = None
    human_verdict: str | None = None

    def to_payload(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "series_id": self.series_id,
            "kind": self.spec.kind,
            "magnitude": self.spec.magnitude,
            "window_start": self.spec.window_start,
            "window_len": self.spec.window_len,
            "seed": self.spec.seed,
            "window": [
                {"date": d.isoformat(), "value": round(v, 6)}
                for d, v in zip(self.window_dates, self.window_values)
            ],
            "confidence": self.model_confidence,
            "novelty": self.novelty_score,
            "tag": self.tag,
            "human_verdict": self.human_verdict,
        }


def _centered_weekly_ma(values: np.ndarray) -> np.ndarray:
    """Centered 7-day moving average with shrinking edge windows."""
    n = len(values)
    out = np.empty(n)
    for i in range(n):
        lo = max(0, i - 3)
        hi = min(n, i + 4)
        out[i] = float(np.mean(values[lo:hi]))
    return out


def generate(base: TimeSeries, spec: PerturbationSpec, scenario_id: str,
             forecast_id: str | None = None) -> Scenario:
    """Apply a perturbation spec to the base series window.

    All kinds are identity at magnitude 0 and deterministic under the spec
    seed; generated values are clamped at zero.
    """
    n = len(base)
    start, length = spec.window_start, spec.window_len
    if start < 0 or start + length > n:
        raise UsageError(
            f"window [{start}, {start + length}) falls outside the series of length {n}"
        )
    values = base.values_array()
    out = values.copy()
    window = slice(start, start + length)
    if spec.kind == "demand_shock":
        out[window] = values[window] + spec.magnitude * float(np.mean(values))
    elif spec.kind == "trend_shift":
        ramp = np.arange(length, dtype=float)
        out[window] = values[window] + spec.magnitude * ramp
    elif spec.kind == "season_amplify":
        seasonal = values - _centered_weekly_ma(values)
        out[window] = values[window] + spec.magnitude * seasonal[window]
    else:  # noise_resample: pull window values toward mean + resampled residuals
        rng = np.random.default_rng(spec.seed)
        mean = float(np.mean(values))
        residuals = values - mean
        draws = residuals[rng.integers(0, n, size=length)]
        target = mean + draws
        out[window] = values[window] + spec.magnitude * (target - values[window])
    out = np.maximum(out, 0.0)
    perturbed = TimeSeries(base.series_id, base.dates, tuple(float(v) for v in out))
    window_dates = base.dates[start: start + length]
    window_values = perturbed.values[start: start + length]
    return Scenario(
        scenario_id=scenario_id,
        series_id=base.series_id,
        spec=spec,
        window_dates=tuple(window_dates),
        window_values=tuple(window_values),
        perturbed=perturbed,
        forecast_id=forecast_id,
    )


def confidence_from_spread(ensemble_std: float, series_std: float) -> float:
    """1 / (1 + ensemble_std / series_std), defined as 1 for a zero-variance
    series with zero disagreement and 0 when disagreement is positive there."""
    if ensemble_std < 0 or series_std < 0:
        raise UsageError("spreads must be nonnegative")
    if series_std == 0.0:
        return 1.0 if ensemble_std == 0.0 else 0.0
    return 1.0 / (1.0 + ensemble_std / series_std)


def window_features(scenario: Scenario) -> list[FeatureVector]:
    """Featurized instances over the scenario window (per perturbed history)."""
    rows = []
    for d in scenario.window_dates:
        try:
            rows.append(featurize(scenario.perturbed, d))
        except HistoryError:
            continue
    if not rows:
        raise HistoryError(
            "scenario window has no featurizable dates; place it at least "
            f"{MIN_FEATURE_HISTORY} days into the series"
        )
    return rows


def assess(
    scenario: Scenario,
    committee: Committee,
    stats: TrainingStats,
    novelty_threshold: float = DEFAULT_NOVELTY_THRESHOLD,
) -> Scenario:
    """Tag a scenario by model confidence and novelty.

    Confidence compares mean committee disagreement over the window with the
    training window's std; novelty is the evasion detector score, maximized
    over the window's instances. Tag priority: low_confidence (strict < 0.5),
    then novel, then plausible.
    """
    if committee.series_id != scenario.series_id:
        raise UsageError("committee does not cover the scenario's series")
    rows = window_features(scenario)
    spreads = [float(np.std(committee.predictions(row))) for row in rows]
    ensemble_std = float(np.mean(spreads))
    confidence = confidence_from_spread(ensemble_std, stats.series_std)
    novelty = max(detect_evasion(row, stats, novelty_threshold).score for row in rows)
    if confidence < LOW_CONFIDENCE_BELOW:
        tag = "low_confidence"
    elif novelty > novelty_threshold:
        tag = "novel"
    else:
        tag = "plausible"
    scenario.model_confidence = confidence
    scenario.novelty_score = novelty
    scenario.tag = tag
    return scenario


def scenarios_to_csv(scenarios: Sequence[Scenario]) -> str:
    """Tabular scenario export: one row per scenario with its assessment."""
    lines = ["scenario_id,kind,magnitude,confidence,novelty,tag,human_verdict"]
    for s in scenarios:
        conf = "" if s.model_confidence is None else f"{s.model_confidence:.6f}"
        nov = "" if s.novelty_score is None else f"{s.novelty_score:.6f}"
        lines.append(
            f"{s.scenario_id},{s.spec.kind},{s.spec.magnitude:g},"
            f"{conf},{nov},{s.tag or ''},{s.human_verdict or ''}"
        )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PseudoObservation:
    scenario_id: str
    day: date
    features: FeatureVector
    value: float
    weight: float


@dataclass(frozen=True)
class AugmentedTrainingSet:
    base: TimeSeries
    pseudo: tuple[PseudoObservation, ...]

    @property
    def appended_points(self) -> int:
        return len(self.pseudo)

    def pseudo_rows(self) -> list[tuple[FeatureVector, float, float]]:
        return [(p.features, p.value, p.weight) for p in self.pseudo]


def augment(
    base: TimeSeries,
    scenarios: Sequence[Scenario],
    weight: float = DEFAULT_AUGMENT_WEIGHT,
) -> AugmentedTrainingSet:
    """Append human-confirmed plausible scenario windows as weighted
    pseudo-observations.

    Passing a scenario whose tag is not ``plausible`` is an eligibility error;
    plausible scenarios still awaiting (or denied) a human verdict are skipped
    silently.
    """
    if not 0 < weight <= 1:
        raise UsageError("pseudo-observation weight must be in (0, 1]")
    pseudo: list[PseudoObservation] = []
    for scenario in scenarios:
        if scenario.tag != "plausible":
            raise EligibilityError(
                f"scenario {scenario.scenario_id} is tagged {scenario.tag!r}; "
                "only plausible scenarios may augment training"
            )
        if scenario.human_verdict != "plausible":
            continue
        for d, v in zip(scenario.window_dates, scenario.window_values):
            features = featurize(scenario.perturbed, d)
            pseudo.append(PseudoObservation(scenario.scenario_id, d, features, float(v), weight))
    return AugmentedTrainingSet(base=base, pseudo=tuple(pseudo))
