"""Labeling queue: rank the instances the model is least sure about and route
human labels back as authoritative corrections.

Uncertainty comes from a query-by-committee ensemble: ridge models fit on
block-bootstrap resamples of the training rows disagree most where the data
was noisy or thin. Batch selection is greedy argmax with a temporal diversity
gap so labels are not spent on adjacent days.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DataValidationError, StateError, UsageError
from .forecasting import RidgeLagForecaster, design_rows
from .series import TimeSeries

STRATEGIES = ("ensemble_std", "interval_width", "random")
MIN_COMMITTEE = 3
BOOTSTRAP_BLOCK = 7
DEFAULT_COMMITTEE_SIZE = 10
DEFAULT_BATCH_SIZE = 5
DEFAULT_MIN_GAP_DAYS = 3


@dataclass(frozen=True)
class Committee:
    series_id: str
    model_key: str
    seed: int
    members: tuple[RidgeLagForecaster, ...]

    def __post_init__(self):
        if len(self.members) < MIN_COMMITTEE:
            raise UsageError(f"committee needs at least {MIN_COMMITTEE} members")

    def predictions(self, features: Mapping[str, float]) -> np.ndarray:
        return np.array([m.predict_features(features) for m in self.members])


def build_committee(
    series: TimeSeries,
    model_key: str,
    size: int,
    seed: int,
    ridge_lambda: float = 1.0,
    excluded: frozenset[date] = frozenset(),
) -> Committee:
    """Fit ``size`` ridge members on block-bootstrap resamples (block length 7)
    of the training rows. Deterministic under ``seed``."""
    if size < MIN_COMMITTEE:
        raise UsageError(f"committee size must be at least {MIN_COMMITTEE}, got {size}")
    if model_key != "ridge_lags":
        raise UsageError("committees are defined for the ridge_lags feature model")
    X, y, w = design_rows(series, excluded)
    n = len(y)
    if n == 0:
        raise UsageError("series has no usable training rows")
    rng = np.random.default_rng(seed)
    n_blocks = math.ceil(n / BOOTSTRAP_BLOCK)
    members = []
    for _ in range(size):
        starts = rng.integers(0, max(1, n - BOOTSTRAP_BLOCK + 1), size=n_blocks)
        idx = np.concatenate([np.arange(s, min(s + BOOTSTRAP_BLOCK, n)) for s in starts])[:n]
        members.append(RidgeLagForecaster(lam=ridge_lambda).fit_rows(X[idx], y[idx], w[idx]))
    return Committee(series.series_id, model_key, seed, tuple(members))


@dataclass(frozen=True)
class Candidate:
    series_id: str
    day: date
    features: Mapping[str, float]

    @property
    def item_id(self) -> str:
        return f"{self.series_id}:{self.day.isoformat()}"


def acquisition_score(
    candidate: Candidate,
    committee: Committee | None,
    strategy: str,
    interval: tuple[float, float] | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Ranking value for one candidate under the chosen strategy.

    ``ensemble_std`` is the population std of committee point predictions;
    ``interval_width`` is upper minus lower of the primary model's interval;
    ``random`` draws uniformly from the queue RNG.
    """
    if strategy == "ensemble_std":
        if committee is None:
            raise UsageError("ensemble_std scoring needs a committee")
        return float(np.std(committee.predictions(candidate.features)))
    if strategy == "interval_width":
        if interval is None:
            raise UsageError("interval_width scoring needs the primary model's interval")
        lower, upper = interval
        return float(upper - lower)
    if strategy == "random":
        if rng is None:
            raise UsageError("random scoring needs the queue RNG")
        return float(rng.uniform())
    raise UsageError(f"unknown acquisition strategy {strategy!r}; expected one of {STRATEGIES}")


@dataclass
class QueryItem:
    item_id: str
    series_id: str
    day: date
    acquisition_score: float
    strategy: str
    status: str = "pending"  # pending -> labeled | skipped
    created_at: str = ""
    label: float | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise UsageError(f"unknown strategy {self.strategy!r}")
        if not math.isfinite(self.acquisition_score):
            raise DataValidationError("acquisition score must be finite")


def select_batch(
    scored: Sequence[tuple[Candidate, float]],
    k: int,
    min_gap_days: int,
    strategy: str,
    created_at: str = "",
) -> list[QueryItem]:
    """Greedy argmax with a per-series diversity gap.

    No two selected items on the same series may lie within ``min_gap_days``
    of each other; ties break toward the earlier date, then the lexicographic
    item id. Returns at most ``k`` pending items.
    """
    if k < 1:
        raise UsageError("batch size k must be at least 1")
    ordered = sorted(scored, key=lambda cs: (-cs[1], cs[0].day, cs[0].item_id))
    chosen: list[tuple[Candidate, float]] = []
    for cand, score in ordered:
        if len(chosen) == k:
            break
        conflict = any(
            c.series_id == cand.series_id and abs((c.day - cand.day).days) < min_gap_days
            for c, _ in chosen
        )
        if not conflict:
            chosen.append((cand, score))
    return [
        QueryItem(
            item_id=c.item_id,
            series_id=c.series_id,
            day=c.day,
            acquisition_score=float(s),
            strategy=strategy,
            created_at=created_at,
        )
        for c, s in chosen
    ]


@dataclass(frozen=True)
class CorrectionRecord:
    """An authoritative human label, layered over (never merged into) raw history."""

    series_id: str
    day: date
    value: float
    user_id: str
    created_at: str = ""


class LabelQueue:
    """Pending query items plus the labeled/skipped terminal states.

    ``on_label`` receives each new correction record (the platform wires it to
    correction storage and the retrain trigger); the status flip, the
    correction record, and the trigger happen together or not at all.
    """

    def __init__(self, on_label: Callable[[CorrectionRecord], None] | None = None):
        self._items: dict[str, QueryItem] = {}
        self.on_label = on_label

    def add_items(self, items: Sequence[QueryItem]) -> int:
        added = 0
        for item in items:
            if item.item_id not in self._items:
                self._items[item.item_id] = item
                added += 1
        return added

    def get(self, item_id: str) -> QueryItem | None:
        return self._items.get(item_id)

    def pending(self, series_id: str | None = None) -> list[QueryItem]:
        items = [
            i for i in self._items.values()
            if i.status == "pending" and (series_id is None or i.series_id == series_id)
        ]
        return sorted(items, key=lambda i: (-i.acquisition_score, i.day, i.item_id))

    def all_items(self) -> list[QueryItem]:
        return sorted(self._items.values(), key=lambda i: (i.series_id, i.day))

    def submit_label(self, item_id: str, value: float, user_id: str, created_at: str = "") -> QueryItem:
        item = self._items.get(item_id)
        if item is None:
            raise UsageError(f"unknown query item {item_id!r}")
        if item.status != "pending":
            raise StateError(f"query item {item_id!r} is already {item.status}")
        value = float(value)
        if not math.isfinite(value) or value < 0:
            raise DataValidationError("label must be a nonnegative number")
        record = CorrectionRecord(item.series_id, item.day, value, user_id, created_at)
        if self.on_label is not None:
            self.on_label(record)  # raising here leaves the item pending
        item.status = "labeled"
        item.label = value
        return item

    def skip(self, item_id: str) -> QueryItem:
        item = self._items.get(item_id)
        if item is None:
            raise UsageError(f"unknown query item {item_id!r}")
        if item.status != "pending":
            raise StateError(f"query item {item_id!r} is already {item.status}")
        item.status = "skipped"
        return item

    def export_csv(self) -> str:
        lines = ["item_id,series_id,date,score,strategy,status"]
        for i in self.all_items():
            lines.append(
                f"{i.item_id},{i.series_id},{i.day.isoformat()},"
                f"{i.acquisition_score:.6f},{i.strategy},{i.status}"
            )
        return "\n".join(lines) + "\n"
