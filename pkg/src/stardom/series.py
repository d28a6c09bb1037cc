"""Daily demand series: the TimeSeries record, CSV import/export, and featurization."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from datetime import date, timedelta
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataValidationError, HistoryError
from .validation import check_nonempty_str

logger = logging.getLogger(__name__)

FREQUENCY = "daily"
LAGS = (1, 7, 14, 28)
#: History required before a date can be featurized (covers the longest lag).
MIN_FEATURE_HISTORY = 28

FeatureVector = dict[str, float]


@dataclass(frozen=True)
class TimeSeries:
    """Daily demand history: strictly increasing dates, nonnegative values."""

    series_id: str
    dates: tuple[date, ...]
    values: tuple[float, ...]
    frequency: str = FREQUENCY
    _by_date: dict = field(init=False, repr=False, compare=False, hash=False, default=None)

    def __post_init__(self):
        check_nonempty_str(self.series_id, "series_id")
        if self.frequency != FREQUENCY:
            raise DataValidationError(f"only {FREQUENCY!r} series are supported")
        if len(self.dates) != len(self.values):
            raise DataValidationError("dates and values must have equal length")
        prev = None
        for d in self.dates:
            if not isinstance(d, date):
                raise DataValidationError(f"dates must be datetime.date, got {type(d).__name__}")
            if prev is not None and d <= prev:
                raise DataValidationError(f"dates must be strictly increasing at {d}")
            prev = d
        vals = np.asarray(self.values, dtype=float)
        if vals.size and (not np.all(np.isfinite(vals)) or np.any(vals < 0)):
            raise DataValidationError("values must be finite and nonnegative")
        object.__setattr__(self, "values", tuple(float(v) for v in vals))
        object.__setattr__(self, "_by_date", dict(zip(self.dates, self.values)))

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def start(self) -> date:
        return self.dates[0]

    @property
    def end(self) -> date:
        return self.dates[-1]

    def values_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def value_at(self, d: date, default: float | None = None) -> float | None:
        return self._by_date.get(d, default)

    def has_date(self, d: date) -> bool:
        return d in self._by_date

    def up_to(self, as_of: date) -> "TimeSeries":
        """Sub-series of points dated at or before ``as_of``."""
        keep = [(d, v) for d, v in zip(self.dates, self.values) if d <= as_of]
        return TimeSeries(self.series_id, tuple(d for d, _ in keep), tuple(v for _, v in keep))

    def without_dates(self, excluded: Iterable[date]) -> "TimeSeries":
        drop = set(excluded)
        keep = [(d, v) for d, v in zip(self.dates, self.values) if d not in drop]
        return TimeSeries(self.series_id, tuple(d for d, _ in keep), tuple(v for _, v in keep))

    def with_points(self, points: Mapping[date, float]) -> "TimeSeries":
        """New series with ``points`` merged in; overlapping dates are replaced."""
        merged = dict(self._by_date)
        merged.update({d: float(v) for d, v in points.items()})
        ordered = sorted(merged.items())
        return TimeSeries(self.series_id, tuple(d for d, _ in ordered), tuple(v for _, v in ordered))


def build_series(series_id: str, start: date, values: Sequence[float]) -> TimeSeries:
    """Convenience constructor for a contiguous daily series."""
    dates = tuple(start + timedelta(days=i) for i in range(len(values)))
    return TimeSeries(series_id, dates, tuple(float(v) for v in values))


def featurize(
    series: TimeSeries,
    target: date,
    exogenous: Mapping[str, float] | None = None,
) -> FeatureVector:
    """Feature vector for predicting ``target`` from history strictly before it.

    ``lag_k`` is the observed value at ``target - k`` days; an absent date
    counts as zero demand and is logged as a data-quality warning.
    """
    n_before = sum(1 for d in series.dates if d < target)
    if n_before < MIN_FEATURE_HISTORY:
        raise HistoryError(
            f"need at least {MIN_FEATURE_HISTORY} observations before {target}, have {n_before}"
        )
    features: FeatureVector = {}
    missing: list[date] = []
    for k in LAGS:
        d = target - timedelta(days=k)
        v = series.value_at(d)
        if v is None:
            missing.append(d)
            v = 0.0
        features[f"lag_{k}"] = float(v)
    features["dow"] = float(target.weekday())
    features["month"] = float(target.month)
    if exogenous:
        for name, value in exogenous.items():
            check_nonempty_str(name, "exogenous feature name")
            features[name] = float(value)
    if missing:
        logger.warning(
            "series %s: %d missing lag dates before %s treated as zero demand (first: %s)",
            series.series_id, len(missing), target, missing[0],
        )
    return features


def parse_series_csv(text: str) -> dict[str, TimeSeries]:
    """Parse ``series_id,date,value`` CSV (header required) into series keyed by id."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or set(reader.fieldnames) < {"series_id", "date", "value"}:
        raise DataValidationError("series CSV must have header series_id,date,value")
    buckets: dict[str, list[tuple[date, float]]] = {}
    for i, row in enumerate(reader, start=2):
        sid = (row.get("series_id") or "").strip()
        check_nonempty_str(sid, f"series_id (line {i})")
        try:
            d = date.fromisoformat((row.get("date") or "").strip())
        except ValueError as exc:
            raise DataValidationError(f"bad date on line {i}: {exc}") from exc
        try:
            v = float(row.get("value") or "")
        except ValueError as exc:
            raise DataValidationError(f"bad value on line {i}: {exc}") from exc
        buckets.setdefault(sid, []).append((d, v))
    out: dict[str, TimeSeries] = {}
    for sid, points in buckets.items():
        points.sort(key=lambda p: p[0])
        seen = {d for d, _ in points}
        if len(seen) != len(points):
            raise DataValidationError(f"series {sid!r} has duplicate dates")
        out[sid] = TimeSeries(sid, tuple(d for d, _ in points), tuple(v for _, v in points))
    return out


def series_to_csv(series: TimeSeries) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["series_id", "date", "value"])
    for d, v in zip(series.dates, series.values):
        writer.writerow([series.series_id, d.isoformat(), repr(v)])
    return buf.getvalue()
