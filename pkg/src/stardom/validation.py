"""Input validation helpers used across estimators and stores.

Small check_* functions in the spirit of sklearn's validation utilities:
they either return the (possibly coerced) value or raise a typed error.
"""

from __future__ import annotations

import math
from datetime import date
from typing import Mapping

import numpy as np

from .errors import DataValidationError, UsageError

Literal = str | int | float | date


def check_positive(value: float, name: str) -> float:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise UsageError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_nonnegative(value: float, name: str) -> float:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value >= 0):
        raise DataValidationError(f"{name} must be a nonnegative finite number, got {value!r}")
    return float(value)


def check_int_at_least(value: int, minimum: int, name: str) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise UsageError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return value


def check_nonempty_str(value: str, name: str) -> str:
    if not isinstance(value, str) or not value:
        raise DataValidationError(f"{name} must be a nonempty string, got {value!r}")
    return value


def check_feature_vector(features: Mapping[str, float]) -> dict[str, float]:
    """Validate a named feature mapping: finite values, nonnegative lags."""
    out: dict[str, float] = {}
    for name, value in features.items():
        check_nonempty_str(name, "feature name")
        v = float(value)
        if not math.isfinite(v):
            raise DataValidationError(f"feature {name!r} is not finite: {value!r}")
        if name.startswith("lag_") and v < 0:
            raise DataValidationError(f"lag feature {name!r} must be nonnegative, got {v}")
        out[name] = v
    return out


def check_values_array(values, name: str = "values") -> np.ndarray:
    """Coerce to a 1-D float array of finite nonnegative demand values."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise DataValidationError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise DataValidationError(f"{name} contains non-finite entries")
    if np.any(arr < 0):
        raise DataValidationError(f"{name} contains negative demand values")
    return arr


def check_literal(value: Literal, name: str = "value") -> Literal:
    if isinstance(value, bool) or not isinstance(value, (str, int, float, date)):
        raise DataValidationError(
            f"{name} must be a string, number, or date literal, got {type(value).__name__}"
        )
    if isinstance(value, float) and not math.isfinite(value):
        raise DataValidationError(f"{name} must be finite")
    return value
