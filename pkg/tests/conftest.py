import json
import sys
from datetime import date
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stardom.config import PlatformConfig, parse_config
from stardom.platform import Platform
from stardom.series import build_series

START = date(2026, 1, 5)  # a Monday


def fixed_clock():
    return "2026-08-01T00:00:00+00:00"


@pytest.fixture
def noisy_series():
    rng = np.random.default_rng(7)
    values = np.maximum(0.0, 100 + 10 * rng.standard_normal(120))
    return build_series("demand-1", START, values)


@pytest.fixture
def weekly_series():
    pattern = [40, 50, 60, 70, 80, 30, 20]
    values = [pattern[i % 7] + 0.5 * i for i in range(112)]
    return build_series("weekly-1", START, values)


def make_config(tmp_path, **auth) -> PlatformConfig:
    doc = {
        "storage": {"data_dir": str(tmp_path / "data")},
        "auth": auth or {
            "tokens": {
                "tok-admin": "ada",
                "tok-planner": "pat",
                "tok-manager": "max",
            },
            "users": [
                {"user_id": "ada", "role": "admin", "display_name": "Ada"},
                {
                    "user_id": "pat",
                    "role": "planner",
                    "visible_features": ["lag_1", "lag_7", "dow", "month"],
                    "display_name": "Pat",
                },
                {
                    "user_id": "max",
                    "role": "manager",
                    "visible_features": ["lag_1", "lag_7", "lag_14", "lag_28", "dow", "month"],
                    "display_name": "Max",
                },
            ],
        },
    }
    return parse_config(doc)


@pytest.fixture
def platform(tmp_path):
    return Platform(make_config(tmp_path), clock=fixed_clock)


@pytest.fixture
def admin(platform):
    return platform.config.user_by_id("ada")


@pytest.fixture
def planner(platform):
    return platform.config.user_by_id("pat")


def series_csv(series) -> str:
    lines = ["series_id,date,value"]
    for d, v in zip(series.dates, series.values):
        lines.append(f"{series.series_id},{d.isoformat()},{v}")
    return "\n".join(lines) + "\n"


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.passed else "FAIL"
        print(f"\n[ACCEPTANCE] {outcome} {name}", flush=True)
