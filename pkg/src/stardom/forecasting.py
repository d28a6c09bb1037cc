"""Daily demand forecasters with backtesting and residual-quantile intervals.

Four model families behind one estimator API (``fit`` / ``predict``,
sklearn-style ``get_params``):

* ``naive`` — repeat the last observed value.
* ``seasonal_naive`` — repeat the last weekly cycle.
* ``holt_winters`` — additive level/trend/weekly-season smoothing with fixed
  smoothing constants.
* ``ridge_lags`` — ridge regression on demand lags (1, 7, 14, 28), iterated
  one step at a time over the horizon.

Prediction intervals come from pooled rolling-origin backtest residuals:
per-step band = point plus the empirical residual quantiles at the configured
coverage, clamped to nonnegative demand.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from typing import Any, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator

from .errors import HistoryError, NumericalError, UsageError
from .security import TrainingStats
from .series import LAGS, MIN_FEATURE_HISTORY, FeatureVector, TimeSeries, featurize
from .validation import check_int_at_least

MODEL_KEYS = ("naive", "seasonal_naive", "holt_winters", "ridge_lags")
RIDGE_FEATURES = tuple(f"lag_{k}" for k in LAGS)
SEASON_LENGTH = 7
BACKTEST_WINDOW = 7

MIN_HISTORY = {
    "naive": 1,
    "seasonal_naive": 2 * SEASON_LENGTH,
    "holt_winters": 2 * SEASON_LENGTH,
    "ridge_lags": 2 * MIN_FEATURE_HISTORY,
}

DEFAULT_HW_PARAMS = (0.3, 0.1, 0.2)
NORMAL_EQUATION_TOL = 1e-9


# ---------------------------------------------------------------------------
# linear algebra
# ---------------------------------------------------------------------------

def solve_ridge(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    sample_weight: np.ndarray | None = None,
) -> np.ndarray:
    """Solve (XᵀWX + λI)w = XᵀWy and verify the normal-equation residual."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise UsageError("X must be 2-D with one target per row")
    if lam < 0:
        raise UsageError("ridge strength must be nonnegative")
    if sample_weight is None:
        Xw = X
        yw = y
    else:
        w = np.asarray(sample_weight, dtype=float)
        if w.shape != y.shape or np.any(w < 0):
            raise UsageError("sample_weight must be nonnegative, one per row")
        Xw = X * w[:, None]
        yw = y * w
    gram = X.T @ Xw + lam * np.eye(X.shape[1])
    rhs = X.T @ yw
    if lam == 0 and (gram.size == 0 or np.linalg.cond(gram) > 1e12):
        raise NumericalError(
            "normal equations are singular; retry with a ridge strength > 0"
        )
    try:
        coef = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        if lam == 0:
            raise NumericalError(
                "normal equations are singular; retry with a ridge strength > 0"
            ) from exc
        raise NumericalError(f"ridge solve failed: {exc}") from exc
    residual = np.max(np.abs(gram @ coef - rhs))
    scale = max(1.0, float(np.max(np.abs(rhs))) if rhs.size else 1.0)
    if not np.all(np.isfinite(coef)) or residual > NORMAL_EQUATION_TOL * scale * 10:
        if lam == 0:
            raise NumericalError(
                "normal equations are numerically singular; retry with a ridge strength > 0"
            )
        raise NumericalError("ridge solve did not meet the normal-equation tolerance")
    return coef


# ---------------------------------------------------------------------------
# forecaster estimators
# ---------------------------------------------------------------------------

class BaseForecaster(BaseEstimator):
    """Common fit/predict surface for all model families."""

    model_key: str = ""
    min_history: int = 1
    #: feature interface for explanation; None means not explainable
    feature_names: tuple[str, ...] | None = None

    def fit(self, series: TimeSeries, excluded: frozenset[date] = frozenset()):
        if len(series) < self.min_history:
            raise HistoryError(
                f"{self.model_key} needs at least {self.min_history} points, "
                f"series {series.series_id!r} has {len(series)}"
            )
        self._fit(series, excluded)
        self.n_obs_ = len(series)
        self.train_end_ = series.end
        return self

    def _fit(self, series: TimeSeries, excluded: frozenset[date]):
        raise NotImplementedError

    def predict(self, horizon: int, history: TimeSeries) -> np.ndarray:
        """Point path for the ``horizon`` days after ``history.end``."""
        raise NotImplementedError

    def one_step_path(self, series: TimeSeries, targets: Sequence[date]) -> np.ndarray:
        """One-step-ahead predictions for each target date, conditioning on
        actual observations strictly before it."""
        raise NotImplementedError

    def predict_features(self, features: Mapping[str, float]) -> float:
        """Point function over a feature vector; defined only when
        ``feature_names`` is set."""
        raise UsageError(f"{self.model_key} exposes no feature interface")

    def params_out(self) -> dict[str, Any]:
        """Fitted parameters for the model record."""
        raise NotImplementedError


class NaiveForecaster(BaseForecaster):
    model_key = "naive"
    min_history = MIN_HISTORY["naive"]

    def _fit(self, series, excluded):
        self.last_value_ = _last_observed(series, excluded)

    def predict(self, horizon, history):
        last = history.values[-1]
        return np.full(horizon, float(last))

    def one_step_path(self, series, targets):
        return np.array([_value_before(series, d) for d in targets])

    def params_out(self):
        return {"last_value": self.last_value_}


class SeasonalNaiveForecaster(BaseForecaster):
    model_key = "seasonal_naive"
    min_history = MIN_HISTORY["seasonal_naive"]

    def _fit(self, series, excluded):
        self.season_ = _last_season(series, excluded)

    def predict(self, horizon, history):
        season = _last_season(history, frozenset())
        origin = history.start
        t_end = (history.end - origin).days
        out = np.empty(horizon)
        for i in range(1, horizon + 1):
            out[i - 1] = season[(t_end + i) % SEASON_LENGTH]
        return out

    def one_step_path(self, series, targets):
        preds = []
        for d in targets:
            back = d - timedelta(days=SEASON_LENGTH)
            v = series.value_at(back)
            steps = 1
            while v is None and back > series.start and steps < 8:
                back -= timedelta(days=SEASON_LENGTH)
                v = series.value_at(back)
                steps += 1
            preds.append(float(v) if v is not None else _value_before(series, d))
        return np.array(preds)

    def params_out(self):
        return {"season_by_phase": list(self.season_)}


class HoltWintersForecaster(BaseForecaster):
    """Additive Holt-Winters with weekly season and fixed smoothing constants."""

    model_key = "holt_winters"
    min_history = MIN_HISTORY["holt_winters"]
    feature_names = ("dow",)

    def __init__(self, alpha: float = DEFAULT_HW_PARAMS[0],
                 beta: float = DEFAULT_HW_PARAMS[1],
                 gamma: float = DEFAULT_HW_PARAMS[2]):
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma

    def _fit(self, series, excluded):
        level, trend, seasonals, _ = self._pass(series, excluded)
        self.level_ = level
        self.trend_ = trend
        self.seasonals_ = seasonals
        # phase of series.end relative to series.start; needed to map a
        # target weekday onto the seasonal array for the feature interface
        self.end_phase_ = (series.end - series.start).days % SEASON_LENGTH
        self.end_dow_ = series.end.weekday()

    def _pass(self, series: TimeSeries, excluded: frozenset[date]):
        """Run the smoothing recursions over the daily timeline of ``series``.

        Returns final (level, trend, seasonals-by-phase) and the one-step
        predictions per timeline day (NaN where undefined during warm-up).
        Excluded or missing days propagate the state without an update.
        """
        start, end = series.start, series.end
        n_days = (end - start).days + 1
        obs: list[float | None] = [None] * n_days
        for d, v in zip(series.dates, series.values):
            if d not in excluded:
                obs[(d - start).days] = v
        if n_days < 2 * SEASON_LENGTH:
            raise HistoryError("holt_winters needs two full weekly cycles")
        head = [v for v in obs[: 2 * SEASON_LENGTH]]
        observed_head = [v for v in head if v is not None]
        if len(observed_head) < SEASON_LENGTH:
            raise HistoryError("holt_winters needs an observed first fortnight")
        fill = float(np.mean(observed_head))
        head = [fill if v is None else v for v in head]
        m = SEASON_LENGTH
        m1 = float(np.mean(head[:m]))
        m2 = float(np.mean(head[m:]))
        trend = (m2 - m1) / m
        # season means sit at the middle of their weeks; position the level at
        # the end of the second week, where the recursion picks up
        level = m2 + (m - 1) / 2 * trend
        anchor = 2 * m - 1
        seasonals = np.zeros(m)
        for p in range(m):
            seasonals[p] = np.mean(
                [head[p + m * j] - (level + (p + m * j - anchor) * trend) for j in range(2)]
            )
        one_step = np.full(n_days, np.nan)
        a, b, g = self.alpha, self.beta, self.gamma
        for t in range(2 * m, n_days):
            p = t % m
            one_step[t] = level + trend + seasonals[p]
            y = obs[t]
            if y is None:
                level, trend = level + trend, trend
                continue
            prev_level = level
            level = a * (y - seasonals[p]) + (1 - a) * (level + trend)
            trend = b * (level - prev_level) + (1 - b) * trend
            seasonals[p] = g * (y - level) + (1 - g) * seasonals[p]
        return level, trend, seasonals, one_step

    def predict(self, horizon, history):
        level, trend, seasonals, _ = self._pass(history, frozenset())
        t_end = (history.end - history.start).days
        out = np.empty(horizon)
        for i in range(1, horizon + 1):
            out[i - 1] = level + i * trend + seasonals[(t_end + i) % SEASON_LENGTH]
        return out

    def one_step_path(self, series, targets):
        _, _, _, one_step = self._pass(series, frozenset())
        start = series.start
        return np.array([one_step[(d - start).days] for d in targets])

    def predict_features(self, features):
        # horizon-1 point as a function of the target weekday: the seasonal
        # phase is recovered from the weekday offset against the train end.
        dow = int(round(features["dow"]))
        offset = (dow - self.end_dow_) % SEASON_LENGTH
        phase = (self.end_phase_ + offset) % SEASON_LENGTH
        steps = offset if offset != 0 else SEASON_LENGTH
        return float(self.level_ + steps * self.trend_ + self.seasonals_[phase])

    def params_out(self):
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "level": float(self.level_),
            "trend": float(self.trend_),
            "seasonals_by_phase": [float(s) for s in self.seasonals_],
        }


class RidgeLagForecaster(BaseForecaster):
    """Ridge regression on demand lags, iterated over the horizon."""

    model_key = "ridge_lags"
    min_history = MIN_HISTORY["ridge_lags"]
    feature_names = RIDGE_FEATURES

    def __init__(self, lam: float = 1.0):
        self.lam = lam

    def _fit(self, series, excluded):
        X, y, w = design_rows(series, excluded)
        if len(y) == 0:
            raise HistoryError("no usable training rows after exclusions")
        self.coef_ = solve_ridge(X, y, self.lam, w)

    def fit_rows(self, X: np.ndarray, y: np.ndarray, sample_weight=None):
        """Fit directly on a prepared design matrix (augmentation path)."""
        self.coef_ = solve_ridge(X, y, self.lam, sample_weight)
        return self

    def set_coefficients(self, coef: Sequence[float]):
        """Install externally stored coefficients (record reconstruction)."""
        coef = np.asarray(coef, dtype=float)
        if coef.shape != (len(RIDGE_FEATURES),):
            raise UsageError(f"expected {len(RIDGE_FEATURES)} coefficients")
        self.coef_ = coef
        return self

    def predict(self, horizon, history):
        values = {d: v for d, v in zip(history.dates, history.values)}
        out = np.empty(horizon)
        for i in range(1, horizon + 1):
            target = history.end + timedelta(days=i)
            x = np.array(
                [values.get(target - timedelta(days=k), 0.0) for k in LAGS]
            )
            yhat = max(0.0, float(self.coef_ @ x))
            values[target] = yhat  # feed prediction back into later lags
            out[i - 1] = yhat
        return out

    def one_step_path(self, series, targets):
        preds = []
        for d in targets:
            fv = featurize(series, d)
            preds.append(max(0.0, self.predict_features(fv)))
        return np.array(preds)

    def predict_features(self, features):
        # the raw regression function; demand clamping applies to emitted
        # forecast paths, not to the surface the explainer probes
        x = np.array([features[name] for name in RIDGE_FEATURES])
        return float(self.coef_ @ x)

    def params_out(self):
        return {
            "lambda": self.lam,
            "coefficients": {name: float(c) for name, c in zip(RIDGE_FEATURES, self.coef_)},
        }


def design_rows(
    series: TimeSeries,
    excluded: frozenset[date] = frozenset(),
    pseudo: Sequence[tuple[FeatureVector, float, float]] = (),
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lag design matrix for ridge training.

    One row per observation with a full featurization history; rows whose
    target or any lag date is quarantined are dropped so excluded points never
    influence the fit. ``pseudo`` rows (features, target, weight) are appended
    as-is, e.g. scenario pseudo-observations.
    """
    rows, ys, ws = [], [], []
    for idx, (d, v) in enumerate(zip(series.dates, series.values)):
        if idx < MIN_FEATURE_HISTORY:
            continue
        if d in excluded or any(d - timedelta(days=k) in excluded for k in LAGS):
            continue
        fv = featurize(series, d)
        rows.append([fv[name] for name in RIDGE_FEATURES])
        ys.append(v)
        ws.append(1.0)
    for fv, target, weight in pseudo:
        rows.append([fv[name] for name in RIDGE_FEATURES])
        ys.append(float(target))
        ws.append(float(weight))
    return (
        np.asarray(rows, dtype=float).reshape(len(ys), len(RIDGE_FEATURES)),
        np.asarray(ys, dtype=float),
        np.asarray(ws, dtype=float),
    )


def _last_observed(series: TimeSeries, excluded: frozenset[date]) -> float:
    for d, v in zip(reversed(series.dates), reversed(series.values)):
        if d not in excluded:
            return float(v)
    raise HistoryError("series has no usable observations")


def _value_before(series: TimeSeries, target: date) -> float:
    last = None
    for d, v in zip(series.dates, series.values):
        if d >= target:
            break
        last = v
    if last is None:
        raise HistoryError(f"no observation before {target}")
    return float(last)


def _last_season(series: TimeSeries, excluded: frozenset[date]) -> np.ndarray:
    """Most recent observed value per weekly phase (phase 0 = series start)."""
    origin = series.start
    season = np.full(SEASON_LENGTH, np.nan)
    for d, v in zip(series.dates, series.values):
        if d in excluded:
            continue
        season[(d - origin).days % SEASON_LENGTH] = v
    if np.any(np.isnan(season)):
        raise HistoryError("seasonal_naive needs an observation at every weekly phase")
    return season


_FORECASTER_TYPES = {
    "naive": NaiveForecaster,
    "seasonal_naive": SeasonalNaiveForecaster,
    "holt_winters": HoltWintersForecaster,
    "ridge_lags": RidgeLagForecaster,
}


def make_forecaster(model_key: str, model_config: Mapping[str, Any] | None = None) -> BaseForecaster:
    if model_key not in _FORECASTER_TYPES:
        raise UsageError(f"unknown model key {model_key!r}; expected one of {MODEL_KEYS}")
    cfg = model_config or {}
    if model_key == "holt_winters":
        return HoltWintersForecaster(
            alpha=cfg.get("hw_alpha", DEFAULT_HW_PARAMS[0]),
            beta=cfg.get("hw_beta", DEFAULT_HW_PARAMS[1]),
            gamma=cfg.get("hw_gamma", DEFAULT_HW_PARAMS[2]),
        )
    if model_key == "ridge_lags":
        return RidgeLagForecaster(lam=cfg.get("ridge_lambda", 1.0))
    return _FORECASTER_TYPES[model_key]()


# ---------------------------------------------------------------------------
# records, requests, forecasts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ForecastRequest:
    series_id: str
    as_of: date
    horizon: int
    model_key: str

    def __post_init__(self):
        check_int_at_least(self.horizon, 1, "horizon")
        if self.model_key not in MODEL_KEYS:
            raise UsageError(f"unknown model key {self.model_key!r}")


@dataclass(frozen=True)
class ModelRecord:
    model_key: str
    series_id: str
    version: int
    parameters: Mapping[str, Any]
    train_start: date
    train_end: date
    n_obs: int
    excluded_dates: tuple[date, ...]
    residuals: tuple[float, ...]
    stats: TrainingStats | None
    created_at: str = ""

    @property
    def residual_sample_size(self) -> int:
        return len(self.residuals)


@dataclass(frozen=True)
class Forecast:
    forecast_id: str
    series_id: str
    as_of: date
    horizon: int
    model_key: str
    model_version: int
    point: tuple[float, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    coverage: float
    created_at: str = ""
    trust_warning: Mapping[str, Any] | None = None

    def __post_init__(self):
        if not (len(self.point) == len(self.lower) == len(self.upper) == self.horizon):
            raise UsageError("forecast path lengths must equal the horizon")
        for lo, pt, up in zip(self.lower, self.point, self.upper):
            if not (lo <= pt <= up):
                raise UsageError("interval must bracket the point forecast")
            if lo < 0 or pt < 0:
                raise UsageError("forecast values must be nonnegative")

    def to_payload(self) -> dict[str, Any]:
        return {
            "forecast_id": self.forecast_id,
            "series_id": self.series_id,
            "as_of": self.as_of.isoformat(),
            "horizon": self.horizon,
            "model_key": self.model_key,
            "model_version": self.model_version,
            "point": [round(v, 6) for v in self.point],
            "lower": [round(v, 6) for v in self.lower],
            "upper": [round(v, 6) for v in self.upper],
            "coverage": self.coverage,
            "created_at": self.created_at,
            "trust_warning": dict(self.trust_warning) if self.trust_warning else None,
        }


@dataclass(frozen=True)
class FoldResult:
    fold: int
    cut_date: date
    mae: float


@dataclass(frozen=True)
class BacktestReport:
    series_id: str
    model_key: str
    folds: tuple[FoldResult, ...]
    residuals: tuple[float, ...]

    def to_csv(self) -> str:
        lines = ["fold,cut_date,mae"]
        lines += [f"{f.fold},{f.cut_date.isoformat()},{f.mae:.6f}" for f in self.folds]
        return "\n".join(lines) + "\n"


def backtest(
    series: TimeSeries,
    model_key: str,
    folds: int,
    model_config: Mapping[str, Any] | None = None,
    excluded: frozenset[date] = frozenset(),
) -> BacktestReport:
    """Rolling-origin evaluation: each fold trains on a prefix and scores
    one-step-ahead predictions over the following seven days."""
    check_int_at_least(folds, 1, "folds")
    n = len(series)
    min_hist = MIN_HISTORY[_require_key(model_key)]
    earliest_cut = n - BACKTEST_WINDOW * folds
    if earliest_cut < min_hist:
        raise HistoryError(
            f"{folds} folds need {min_hist + BACKTEST_WINDOW * folds} points, series has {n}"
        )
    fold_results = []
    pooled: list[float] = []
    for f in range(1, folds + 1):
        cut = n - BACKTEST_WINDOW * (folds - f + 1)
        prefix = TimeSeries(series.series_id, series.dates[:cut], series.values[:cut])
        forecaster = make_forecaster(model_key, model_config).fit(prefix, excluded)
        targets = series.dates[cut: cut + BACKTEST_WINDOW]
        preds = forecaster.one_step_path(series, targets)
        actual = np.asarray(series.values[cut: cut + BACKTEST_WINDOW])
        residuals = actual - preds
        pooled.extend(float(r) for r in residuals)
        fold_results.append(FoldResult(f, series.dates[cut], float(np.mean(np.abs(residuals)))))
    return BacktestReport(series.series_id, model_key, tuple(fold_results), tuple(pooled))


def max_backtest_folds(series: TimeSeries, model_key: str) -> int:
    return max(0, (len(series) - MIN_HISTORY[_require_key(model_key)]) // BACKTEST_WINDOW)


def fit_model(
    series: TimeSeries,
    model_key: str,
    version: int,
    model_config: Mapping[str, Any] | None = None,
    excluded: frozenset[date] = frozenset(),
    folds: int | None = None,
    pseudo_rows: Sequence[tuple[FeatureVector, float, float]] = (),
    created_at: str = "",
) -> ModelRecord:
    """Train a model and assemble its immutable record.

    Residuals come from a rolling-origin backtest on the same (exclusion-
    filtered) history; training statistics are computed over the featurizable
    part of the window for the detectors and the explainer.
    """
    _require_key(model_key)
    fit_series = series.without_dates(excluded)
    feasible = max_backtest_folds(fit_series, model_key)
    want = folds if folds is not None else min(4, feasible)
    residuals: tuple[float, ...] = ()
    if want >= 1 and feasible >= 1:
        residuals = backtest(fit_series, model_key, min(want, feasible),
                             model_config, excluded).residuals
    forecaster = make_forecaster(model_key, model_config).fit(fit_series, excluded)
    if pseudo_rows:
        if model_key != "ridge_lags":
            raise UsageError("pseudo-observation training is defined for ridge_lags only")
        X, y, w = design_rows(fit_series, excluded, pseudo_rows)
        forecaster.fit_rows(X, y, w)
    stats = _training_stats(fit_series)
    return ModelRecord(
        model_key=model_key,
        series_id=series.series_id,
        version=version,
        parameters=forecaster.params_out(),
        train_start=fit_series.start,
        train_end=fit_series.end,
        n_obs=len(fit_series),
        excluded_dates=tuple(sorted(excluded)),
        residuals=residuals,
        stats=stats,
        created_at=created_at,
    )


def _training_stats(series: TimeSeries) -> TrainingStats | None:
    feature_rows = []
    for idx, d in enumerate(series.dates):
        if idx < MIN_FEATURE_HISTORY:
            continue
        feature_rows.append(featurize(series, d))
    try:
        return TrainingStats.from_data(feature_rows, series.values_array())
    except ValueError:
        return None


def forecaster_from_record(record: ModelRecord, model_config: Mapping[str, Any] | None = None) -> BaseForecaster:
    """Rebuild a serving forecaster from a record's stored parameters."""
    p = dict(record.parameters)
    if record.model_key == "ridge_lags":
        fc = RidgeLagForecaster(lam=p.get("lambda", 1.0))
        fc.set_coefficients([p["coefficients"][name] for name in RIDGE_FEATURES])
        return fc
    if record.model_key == "holt_winters":
        fc = HoltWintersForecaster(alpha=p["alpha"], beta=p["beta"], gamma=p["gamma"])
        return fc
    return make_forecaster(record.model_key, model_config)


def interval_offsets(residuals: Sequence[float], coverage: float) -> tuple[float, float]:
    """Empirical residual quantile offsets; signs clamped so the band always
    brackets the point forecast."""
    if not 0 < coverage < 1:
        raise UsageError("coverage must be in (0, 1)")
    if len(residuals) == 0:
        return 0.0, 0.0
    res = np.asarray(residuals, dtype=float)
    lo = float(np.quantile(res, (1 - coverage) / 2))
    hi = float(np.quantile(res, (1 + coverage) / 2))
    return min(lo, 0.0), max(hi, 0.0)


def predict_from_record(
    record: ModelRecord,
    series: TimeSeries,
    request: ForecastRequest,
    forecast_id: str,
    coverage: float = 0.9,
    horizon_cap: int = 90,
    model_config: Mapping[str, Any] | None = None,
    created_at: str = "",
) -> Forecast:
    """Serve a forecast from a published record.

    State-space families re-filter deterministically over the observed history
    up to ``as_of``; the ridge family applies its stored coefficients. The
    record itself is never mutated.
    """
    if request.series_id != record.series_id or request.model_key != record.model_key:
        raise UsageError("request series/model does not match the model record")
    if request.horizon > horizon_cap:
        raise UsageError(f"horizon {request.horizon} exceeds the cap of {horizon_cap}")
    history = series.up_to(request.as_of)
    if len(history) == 0:
        raise HistoryError(f"no observations at or before {request.as_of}")
    if history.end < record.train_end:
        raise UsageError("as_of precedes the model's training window end")
    forecaster = forecaster_from_record(record, model_config)
    if record.model_key != "ridge_lags":
        forecaster.fit(history)  # deterministic forward filtering over history
    point = forecaster.predict(request.horizon, history)
    lo_off, hi_off = interval_offsets(record.residuals, coverage)
    point = np.maximum(point, 0.0)
    lower = np.maximum(point + lo_off, 0.0)
    upper = np.maximum(point + hi_off, 0.0)
    return Forecast(
        forecast_id=forecast_id,
        series_id=request.series_id,
        as_of=request.as_of,
        horizon=request.horizon,
        model_key=request.model_key,
        model_version=record.version,
        point=tuple(float(v) for v in point),
        lower=tuple(float(v) for v in lower),
        upper=tuple(float(v) for v in upper),
        coverage=coverage,
        created_at=created_at,
    )


def _require_key(model_key: str) -> str:
    if model_key not in MODEL_KEYS:
        raise UsageError(f"unknown model key {model_key!r}; expected one of {MODEL_KEYS}")
    return model_key


class ModelRegistry:
    """Versioned, append-only store of model records.

    Retraining the same (series, model) publishes version ``n+1``; prior
    records are immutable and stay queryable.
    """

    def __init__(self):
        self._records: dict[tuple[str, str], list[ModelRecord]] = {}

    def next_version(self, series_id: str, model_key: str) -> int:
        return len(self._records.get((series_id, model_key), [])) + 1

    def publish(self, record: ModelRecord) -> ModelRecord:
        key = (record.series_id, record.model_key)
        versions = self._records.setdefault(key, [])
        if record.version != len(versions) + 1:
            raise UsageError(
                f"expected version {len(versions) + 1} for {key}, got {record.version}"
            )
        versions.append(record)
        return record

    def latest(self, series_id: str, model_key: str) -> ModelRecord | None:
        versions = self._records.get((series_id, model_key))
        return versions[-1] if versions else None

    def get(self, series_id: str, model_key: str, version: int) -> ModelRecord | None:
        versions = self._records.get((series_id, model_key), [])
        if 1 <= version <= len(versions):
            return versions[version - 1]
        return None

    def keys(self) -> list[tuple[str, str]]:
        return sorted(self._records)
