import json
import os
import random
from datetime import date, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stardom.errors import DetectorUnavailableError, UsageError
from stardom.security import (
    ACTION_CATALOG,
    AuditLog,
    ROLES,
    TrainingStats,
    authorize,
    detect_evasion,
    detect_poisoning,
    robust_z,
)

START = date(2026, 1, 5)


class TestAuthorize:
    @pytest.mark.parametrize(
        "role,action,expected",
        [
            ("planner", "read_forecast", True),
            ("planner", "read_explanation", True),
            ("planner", "submit_feedback", True),
            ("planner", "label", True),
            ("planner", "train", False),
            ("planner", "admin_config", False),
            ("planner", "read_summary", False),
            ("manager", "read_summary", True),
            ("manager", "train", False),
            ("admin", "admin_config", True),
            ("admin", "train", True),
        ],
    )
    def test_role_matrix(self, role, action, expected):
        assert authorize(role, action) is expected

    def test_unknown_action_denied_for_every_role(self):
        for role in ROLES:
            assert authorize(role, "x") is False

    def test_unknown_role_denied_for_every_action(self):
        for action in ACTION_CATALOG:
            assert authorize("intern", action) is False


@pytest.fixture
def log(tmp_path):
    return AuditLog(str(tmp_path / "audit.log"))


class TestAuditChain:
    def test_genesis_prev_digest_is_zero(self, log):
        record = log.append("ada", "train", b"payload")
        assert record.seq == 1
        assert record.prev_digest == "0" * 64

    def test_chain_verifies_after_appends(self, log):
        for i in range(20):
            log.append("ada", "train", f"payload-{i}".encode())
        assert log.verify() is None

    def test_empty_log_verifies(self, log):
        assert log.verify() is None

    def test_payload_tamper_reports_first_broken_seq(self, log, tmp_path):
        import struct

        for i in range(5):
            log.append("ada", "train", f"payload-{i}".encode())
        path = str(tmp_path / "audit.log")
        with open(path, "rb") as fh:
            blob = bytearray(fh.read())
        # walk the length prefixes to the third record and flip a body byte
        offset = 0
        for _ in range(2):
            (length,) = struct.unpack(">I", blob[offset: offset + 4])
            offset += 4 + length
        (length,) = struct.unpack(">I", blob[offset: offset + 4])
        blob[offset + 4 + length // 2] ^= 0x01
        with open(path, "wb") as fh:
            fh.write(blob)
        assert AuditLog(path).verify() == 3

    def test_reopened_log_continues_chain(self, tmp_path):
        path = str(tmp_path / "audit.log")
        first = AuditLog(path)
        first.append("ada", "a", b"1")
        second = AuditLog(path)
        record = second.append("ada", "b", b"2")
        assert record.seq == 2
        assert second.verify() is None

    def test_concurrent_appends_stay_contiguous(self, log):
        import threading

        def writer(tag):
            for i in range(50):
                log.append("ada", "train", f"{tag}-{i}".encode())

        threads = [threading.Thread(target=writer, args=(t,)) for t in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(log) == 200
        assert log.verify() is None


def stats_from_values(values):
    return TrainingStats.from_data([], np.asarray(values, dtype=float))


class TestPoisoningDetector:
    def test_constant_history_matching_point_is_clean(self):
        stats = stats_from_values([10.0] * 30)
        (report,) = detect_poisoning([(START, 10.0)], stats)
        assert report.score == 0.0
        assert report.verdict == "clean"

    def test_hand_computed_ten_sigma_shift_flagged(self):
        # median 10, MAD 1 (computed by hand), robust sigma = 1.4826;
        # a point at median + 10 robust sigma scores 10
        history = [10, 11, 9, 12, 8, 10, 11, 9, 10, 11]
        stats = stats_from_values(history)
        assert stats.series_median == 10
        assert stats.series_mad == 1
        point_value = 10 + 10 * 1.4826
        (report,) = detect_poisoning([(START, point_value)], stats, threshold=6)
        assert report.score == pytest.approx(10.0, rel=1e-6)
        assert report.flagged

    def test_zero_mad_guard(self):
        stats = stats_from_values([5.0, 5.0, 5.0])
        (same,) = detect_poisoning([(START, 5.0)], stats)
        assert same.score == 0.0 and same.verdict == "clean"
        (off,) = detect_poisoning([(START, 5.1)], stats)
        assert off.flagged  # epsilon guard makes any deviation enormous

    def test_threshold_must_be_positive(self):
        stats = stats_from_values([1.0, 2.0, 3.0])
        with pytest.raises(UsageError):
            detect_poisoning([(START, 1.0)], stats, threshold=0)

    @settings(max_examples=40, deadline=None)
    @given(
        scale=st.floats(min_value=1e-3, max_value=1e3),
        seed=st.integers(0, 1000),
    )
    def test_scale_equivariance(self, scale, seed):
        rng = np.random.default_rng(seed)
        history = 50 + 10 * rng.standard_normal(80)
        candidate = float(history[0] + rng.choice([0.0, 25.0, 200.0]))
        verdict_1 = detect_poisoning([(START, candidate)], stats_from_values(history))[0].verdict
        verdict_s = detect_poisoning(
            [(START, candidate * scale)], stats_from_values(history * scale)
        )[0].verdict
        assert verdict_1 == verdict_s


def feature_stats(medians, mads):
    rows = []
    rng = np.random.default_rng(0)
    # synthesize rows whose median/MAD match the requested values exactly
    for offset in (-2.0, -1.0, 0.0, 1.0, 2.0):
        rows.append({name: medians[name] + offset * mads[name] for name in medians})
    return TrainingStats.from_data(rows, np.array([1.0, 2.0, 3.0]))


class TestEvasionDetector:
    def test_instance_at_medians_is_clean(self):
        stats = feature_stats({"lag_1": 10.0, "dow": 3.0}, {"lag_1": 2.0, "dow": 1.0})
        report = detect_evasion({"lag_1": 10.0, "dow": 3.0}, stats)
        assert report.score == 0.0
        assert report.verdict == "clean"

    def test_ten_robust_sigma_feature_flagged(self):
        stats = feature_stats({"lag_1": 10.0, "dow": 3.0}, {"lag_1": 2.0, "dow": 1.0})
        shifted = 10.0 + 10 * 1.4826 * 2.0
        report = detect_evasion({"lag_1": shifted, "dow": 3.0}, stats, threshold=5)
        assert report.score == pytest.approx(10.0, rel=1e-6)
        assert report.flagged

    def test_score_is_max_over_shared_features(self):
        stats = feature_stats({"a": 0.0, "b": 0.0}, {"a": 1.0, "b": 1.0})
        report = detect_evasion({"a": 1.4826, "b": 2 * 1.4826}, stats)
        assert report.score == pytest.approx(2.0, rel=1e-6)

    def test_partial_overlap_scores_shared_only(self):
        stats = feature_stats({"a": 0.0}, {"a": 1.0})
        report = detect_evasion({"a": 0.0, "zz": 99.0}, stats)
        assert report.score == 0.0

    def test_disjoint_features_unavailable(self):
        stats = feature_stats({"a": 0.0}, {"a": 1.0})
        with pytest.raises(DetectorUnavailableError):
            detect_evasion({"zz": 1.0}, stats)


class TestRobustZ:
    def test_formula(self):
        assert robust_z(12.0, 10.0, 1.0) == pytest.approx(2 / 1.4826, rel=1e-9)

    def test_zero_mad_epsilon(self):
        assert robust_z(10.0, 10.0, 0.0) == 0.0
        assert robust_z(10.001, 10.0, 0.0) > 1e5
