"""Trusted human-in-the-loop demand forecasting platform.

Forecasting, local-surrogate explanations, active learning, scenario
simulation, decision recommendations, feedback capture, and a security/trust
layer (RBAC, hash-chained audit, poisoning/evasion detectors) composed behind
one service API and CLI.
"""

from .config import PlatformConfig, load_config
from .errors import StardomError
from .explain import Explanation, LocalSurrogateExplainer
from .feedback import FeedbackEvent, UserProfile
from .forecasting import (
    Forecast,
    ForecastRequest,
    HoltWintersForecaster,
    ModelRecord,
    NaiveForecaster,
    RidgeLagForecaster,
    SeasonalNaiveForecaster,
    backtest,
    fit_model,
    make_forecaster,
    predict_from_record,
)
from .graph import Entity, Triple, TripleStore
from .platform import Platform
from .series import TimeSeries, build_series, featurize

__version__ = "0.1.0"

__all__ = [
    "Entity",
    "Explanation",
    "FeedbackEvent",
    "Forecast",
    "ForecastRequest",
    "HoltWintersForecaster",
    "LocalSurrogateExplainer",
    "ModelRecord",
    "NaiveForecaster",
    "Platform",
    "PlatformConfig",
    "RidgeLagForecaster",
    "SeasonalNaiveForecaster",
    "StardomError",
    "TimeSeries",
    "Triple",
    "TripleStore",
    "UserProfile",
    "backtest",
    "build_series",
    "featurize",
    "fit_model",
    "load_config",
    "make_forecaster",
    "predict_from_record",
]
