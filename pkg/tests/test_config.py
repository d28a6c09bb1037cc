import json

import pytest

from stardom.config import CONFIG_ENV_VAR, PlatformConfig, load_config, parse_config
from stardom.errors import ConfigError


def write_config(tmp_path, doc):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return str(path)


class TestParse:
    def test_defaults_apply(self):
        config = parse_config({})
        assert config.coverage == 0.9
        assert config.poisoning_threshold == 6.0
        assert config.committee_size == 10

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown top-level"):
            parse_config({"modells": {}})

    def test_unknown_section_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            parse_config({"models": {"hw_alpha": 0.2, "hw_delta": 0.1}})

    def test_nonpositive_threshold_rejected(self):
        with pytest.raises(ConfigError, match="positive"):
            parse_config({"security": {"poisoning_threshold": 0}})

    def test_evasion_blocking_flag(self):
        assert parse_config({}).evasion_blocking is False
        assert parse_config({"security": {"evasion_blocking": True}}).evasion_blocking is True

    def test_coverage_must_be_fractional(self):
        with pytest.raises(ConfigError, match="coverage"):
            parse_config({"models": {"coverage": 1.5}})

    def test_token_must_map_to_known_user(self):
        with pytest.raises(ConfigError, match="unknown user"):
            parse_config({"auth": {"tokens": {"t": "ghost"}, "users": []}})

    def test_users_and_tokens_resolve(self):
        config = parse_config(
            {
                "auth": {
                    "tokens": {"t1": "ada"},
                    "users": [{"user_id": "ada", "role": "admin"}],
                }
            }
        )
        assert config.user_for_token("t1").user_id == "ada"
        assert config.user_for_token("nope") is None


class TestLoad:
    def test_load_from_path(self, tmp_path):
        path = write_config(tmp_path, {"models": {"coverage": 0.8}})
        assert load_config(path).coverage == 0.8

    def test_env_var_overrides_path(self, tmp_path, monkeypatch):
        path_a = write_config(tmp_path, {"models": {"coverage": 0.8}})
        path_b = tmp_path / "other.json"
        path_b.write_text(json.dumps({"models": {"coverage": 0.7}}))
        monkeypatch.setenv(CONFIG_ENV_VAR, str(path_b))
        assert load_config(path_a).coverage == 0.7

    def test_no_path_gives_defaults(self, monkeypatch):
        monkeypatch.delenv(CONFIG_ENV_VAR, raising=False)
        assert load_config(None) == PlatformConfig()

    def test_bad_json_is_config_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_missing_file_is_config_error(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "absent.json"))
