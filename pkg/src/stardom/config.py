"""Platform configuration: a strict JSON document with model defaults,
thresholds, storage paths, and the token/user tables.

Unknown keys anywhere in the document are rejected at load time; the
``STARDOM_CONFIG`` environment variable overrides the config path.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Mapping

from .errors import ConfigError
from .feedback import UserProfile

CONFIG_ENV_VAR = "STARDOM_CONFIG"

_SCHEMA: dict[str, tuple[str, ...]] = {
    "storage": ("data_dir",),
    "api": ("host", "port"),
    "models": (
        "hw_alpha", "hw_beta", "hw_gamma", "ridge_lambda",
        "coverage", "horizon_cap", "backtest_folds",
    ),
    "explain": ("n_samples", "surrogate_lambda", "kernel_sigma_factor"),
    "active_learning": ("committee_size", "batch_size", "min_gap_days", "queue_seed"),
    "scenarios": ("augment_weight", "novelty_threshold"),
    "security": ("poisoning_threshold", "evasion_threshold", "evasion_blocking"),
    "auth": ("tokens", "users"),
}

_POSITIVE_KEYS = (
    ("models", "coverage"),
    ("models", "horizon_cap"),
    ("explain", "n_samples"),
    ("explain", "surrogate_lambda"),
    ("explain", "kernel_sigma_factor"),
    ("active_learning", "committee_size"),
    ("active_learning", "batch_size"),
    ("scenarios", "augment_weight"),
    ("scenarios", "novelty_threshold"),
    ("security", "poisoning_threshold"),
    ("security", "evasion_threshold"),
)


@dataclass(frozen=True)
class PlatformConfig:
    data_dir: str = "./stardom-data"
    host: str = "127.0.0.1"
    port: int = 8321
    hw_alpha: float = 0.3
    hw_beta: float = 0.1
    hw_gamma: float = 0.2
    ridge_lambda: float = 1.0
    coverage: float = 0.9
    horizon_cap: int = 90
    backtest_folds: int = 4
    n_samples: int = 1000
    surrogate_lambda: float = 0.01
    kernel_sigma_factor: float = 0.75
    committee_size: int = 10
    batch_size: int = 5
    min_gap_days: int = 3
    queue_seed: int = 0
    augment_weight: float = 0.5
    novelty_threshold: float = 5.0
    poisoning_threshold: float = 6.0
    evasion_threshold: float = 5.0
    #: when true, a flagged serving instance rejects the forecast instead of
    #: annotating it with a trust warning
    evasion_blocking: bool = False
    tokens: Mapping[str, str] = field(default_factory=dict)
    users: tuple[UserProfile, ...] = ()

    def model_config(self) -> dict[str, float]:
        return {
            "hw_alpha": self.hw_alpha,
            "hw_beta": self.hw_beta,
            "hw_gamma": self.hw_gamma,
            "ridge_lambda": self.ridge_lambda,
        }

    def user_by_id(self, user_id: str) -> UserProfile | None:
        for user in self.users:
            if user.user_id == user_id:
                return user
        return None

    def user_for_token(self, token: str) -> UserProfile | None:
        user_id = self.tokens.get(token)
        return self.user_by_id(user_id) if user_id else None


def _check_keys(section: str, doc: Mapping[str, Any]):
    allowed = _SCHEMA[section]
    unknown = [k for k in doc if k not in allowed]
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in config section {section!r}")


def parse_config(doc: Mapping[str, Any]) -> PlatformConfig:
    if not isinstance(doc, Mapping):
        raise ConfigError("config document must be a JSON object")
    unknown = [k for k in doc if k not in _SCHEMA]
    if unknown:
        raise ConfigError(f"unknown top-level config key(s) {unknown}")
    flat: dict[str, Any] = {}
    for section, keys in _SCHEMA.items():
        sub = doc.get(section, {})
        if not isinstance(sub, Mapping):
            raise ConfigError(f"config section {section!r} must be an object")
        _check_keys(section, sub)
        if section == "auth":
            continue
        for key in keys:
            if key in sub:
                flat[key] = sub[key]
    auth = doc.get("auth", {})
    tokens = dict(auth.get("tokens", {}))
    for token, user_id in tokens.items():
        if not isinstance(token, str) or not isinstance(user_id, str):
            raise ConfigError("auth.tokens must map token strings to user ids")
    users = []
    for entry in auth.get("users", []):
        extra = [k for k in entry if k not in ("user_id", "role", "visible_features", "display_name")]
        if extra:
            raise ConfigError(f"unknown key(s) {extra} in user entry")
        users.append(
            UserProfile(
                user_id=entry.get("user_id", ""),
                role=entry.get("role", ""),
                visible_features=tuple(entry.get("visible_features", ())),
                display_name=entry.get("display_name", ""),
            )
        )
    config = PlatformConfig(tokens=tokens, users=tuple(users), **flat)
    for section, key in _POSITIVE_KEYS:
        value = getattr(config, key)
        if not value > 0:
            raise ConfigError(f"{section}.{key} must be positive, got {value!r}")
    if not 0 < config.coverage < 1:
        raise ConfigError(f"models.coverage must lie in (0, 1), got {config.coverage}")
    for user_id in tokens.values():
        if config.user_by_id(user_id) is None:
            raise ConfigError(f"token maps to unknown user {user_id!r}")
    return config


def load_config(path: str | None = None) -> PlatformConfig:
    """Load config from ``path``; the STARDOM_CONFIG env var wins over it.
    With neither set, built-in defaults apply (no users, no tokens)."""
    effective = os.environ.get(CONFIG_ENV_VAR) or path
    if effective is None:
        return PlatformConfig()
    try:
        with open(effective, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {effective!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {effective!r} is not valid JSON: {exc}") from exc
    return parse_config(doc)
