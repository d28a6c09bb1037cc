"""Cross-cutting trust layer: RBAC, hash-chained audit log, robust-statistics
detectors for training-data poisoning and input-space evasion, and the
quarantine set feeding the training pipeline."""

from __future__ import annotations

import base64
import hashlib
import json
import os
import struct
import threading
from dataclasses import dataclass
from datetime import date
from typing import Mapping, Sequence

import numpy as np

from .errors import DetectorUnavailableError, StorageError, UsageError

ROLES = ("planner", "manager", "admin")

ACTION_CATALOG = (
    "read_forecast",
    "read_explanation",
    "submit_feedback",
    "label",
    "train",
    "admin_config",
    "read_summary",
)

_PLANNER = frozenset({"read_forecast", "read_explanation", "submit_feedback", "label"})
ROLE_MATRIX: dict[str, frozenset[str]] = {
    "planner": _PLANNER,
    "manager": _PLANNER | {"read_summary"},
    "admin": frozenset(ACTION_CATALOG),
}

#: 1.4826 * MAD estimates the standard deviation under normality.
MAD_SCALE = 1.4826
SCALE_EPS = 1e-9

DEFAULT_POISONING_THRESHOLD = 6.0
DEFAULT_EVASION_THRESHOLD = 5.0


def authorize(role: str, action: str) -> bool:
    """Default-deny role matrix; unknown roles or actions always deny."""
    return action in ROLE_MATRIX.get(role, frozenset())


# ---------------------------------------------------------------------------
# hash-chained audit log
# ---------------------------------------------------------------------------

ZERO_DIGEST = "0" * 64


def _digest_payload(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


def _record_digest(seq: int, actor: str, action: str, payload_digest: str, prev_digest: str) -> str:
    h = hashlib.sha256()
    for part in (str(seq), actor, action, payload_digest, prev_digest):
        raw = part.encode("utf-8")
        h.update(struct.pack(">I", len(raw)))
        h.update(raw)
    return h.hexdigest()


@dataclass(frozen=True)
class AuditRecord:
    seq: int
    actor: str
    action: str
    payload_digest: str
    prev_digest: str
    record_digest: str


class AuditLog:
    """Append-only, tamper-evident log backed by a length-prefixed binary file.

    Every record chains to its predecessor through ``record_digest``; appends
    are flushed and fsynced before the guarded action proceeds.
    """

    def __init__(self, path: str):
        self.path = path
        self._lock = threading.Lock()
        self._seq = 0
        self._prev = ZERO_DIGEST
        if os.path.exists(path):
            try:
                for record, _ in self._read_records():
                    self._seq = record.seq
                    self._prev = record.record_digest
            except (ValueError, KeyError, UnicodeDecodeError, json.JSONDecodeError):
                pass  # damage stays visible to verify(); appends continue after it

    def append(self, actor: str, action: str, payload: bytes) -> AuditRecord:
        if not isinstance(payload, bytes):
            raise UsageError("audit payload must be bytes")
        with self._lock:
            seq = self._seq + 1
            payload_digest = _digest_payload(payload)
            record = AuditRecord(
                seq=seq,
                actor=actor,
                action=action,
                payload_digest=payload_digest,
                prev_digest=self._prev,
                record_digest=_record_digest(seq, actor, action, payload_digest, self._prev),
            )
            body = json.dumps(
                {
                    "seq": record.seq,
                    "actor": record.actor,
                    "action": record.action,
                    "payload_digest": record.payload_digest,
                    "prev_digest": record.prev_digest,
                    "record_digest": record.record_digest,
                    "payload_b64": base64.b64encode(payload).decode("ascii"),
                },
                sort_keys=True,
                separators=(",", ":"),
            ).encode("utf-8")
            try:
                with open(self.path, "ab") as fh:
                    fh.write(struct.pack(">I", len(body)))
                    fh.write(body)
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageError(f"audit append failed: {exc}") from exc
            self._seq = seq
            self._prev = record.record_digest
            return record

    def _read_records(self):
        """Yield (record, payload) pairs; raises ValueError on framing/body damage."""
        with open(self.path, "rb") as fh:
            while True:
                header = fh.read(4)
                if not header:
                    return
                if len(header) < 4:
                    raise ValueError("truncated length prefix")
                (length,) = struct.unpack(">I", header)
                body = fh.read(length)
                if len(body) < length:
                    raise ValueError("truncated record body")
                doc = json.loads(body.decode("utf-8"))
                record = AuditRecord(
                    seq=doc["seq"],
                    actor=doc["actor"],
                    action=doc["action"],
                    payload_digest=doc["payload_digest"],
                    prev_digest=doc["prev_digest"],
                    record_digest=doc["record_digest"],
                )
                payload = base64.b64decode(doc["payload_b64"])
                # canonical re-encode: padding-bit tampering must not slip by
                if base64.b64encode(payload).decode("ascii") != doc["payload_b64"]:
                    raise ValueError("non-canonical payload encoding")
                yield record, payload

    def verify(self) -> int | None:
        """Recompute the whole chain; None when intact, else the first broken seq."""
        if not os.path.exists(self.path):
            return None
        expected_seq = 1
        prev = ZERO_DIGEST
        try:
            for record, payload in self._read_records():
                if record.seq != expected_seq:
                    return expected_seq
                if record.prev_digest != prev:
                    return expected_seq
                if _digest_payload(payload) != record.payload_digest:
                    return expected_seq
                recomputed = _record_digest(
                    record.seq, record.actor, record.action,
                    record.payload_digest, record.prev_digest,
                )
                if recomputed != record.record_digest:
                    return expected_seq
                prev = record.record_digest
                expected_seq += 1
        except (ValueError, KeyError, UnicodeDecodeError, json.JSONDecodeError):
            return expected_seq
        return None

    def __len__(self) -> int:
        return self._seq


# ---------------------------------------------------------------------------
# robust statistics and detectors
# ---------------------------------------------------------------------------

def _median_mad(values: np.ndarray) -> tuple[float, float]:
    med = float(np.median(values))
    mad = float(np.median(np.abs(values - med)))
    return med, mad


@dataclass(frozen=True)
class FeatureStat:
    median: float
    mad: float
    mean: float
    std: float


@dataclass(frozen=True)
class TrainingStats:
    """Per-feature and per-series robust location/scale over a training window."""

    features: Mapping[str, FeatureStat]
    series_median: float
    series_mad: float
    series_mean: float
    series_std: float

    @classmethod
    def from_data(cls, feature_rows: Sequence[Mapping[str, float]], values: np.ndarray) -> "TrainingStats":
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            raise ValueError("no values to summarize")
        features: dict[str, FeatureStat] = {}
        if feature_rows:
            names = sorted(feature_rows[0])
            for name in names:
                col = np.array([row[name] for row in feature_rows], dtype=float)
                med, mad = _median_mad(col)
                features[name] = FeatureStat(med, mad, float(np.mean(col)), float(np.std(col)))
        med, mad = _median_mad(values)
        return cls(
            features=features,
            series_median=med,
            series_mad=mad,
            series_mean=float(np.mean(values)),
            series_std=float(np.std(values)),
        )

    def feature_stds(self) -> dict[str, float]:
        return {name: st.std for name, st in self.features.items()}


def robust_z(value: float, median: float, mad: float) -> float:
    """|value - median| in robust standard deviations; scale-free for MAD > 0."""
    return abs(value - median) / (MAD_SCALE * mad + SCALE_EPS)


@dataclass(frozen=True)
class AnomalyReport:
    target: str
    score: float
    threshold: float
    verdict: str  # "clean" | "flagged"
    detector: str  # "poisoning" | "evasion"

    def __post_init__(self):
        expected = "flagged" if self.score > self.threshold else "clean"
        if self.verdict != expected:
            raise UsageError("verdict must follow score > threshold")

    @property
    def flagged(self) -> bool:
        return self.verdict == "flagged"


def detect_poisoning(
    points: Sequence[tuple[date, float]],
    stats: TrainingStats,
    threshold: float = DEFAULT_POISONING_THRESHOLD,
) -> list[AnomalyReport]:
    """Screen incoming demand points against the accepted window's robust stats."""
    if threshold <= 0:
        raise UsageError("poisoning threshold must be positive")
    reports = []
    for d, value in points:
        score = robust_z(float(value), stats.series_median, stats.series_mad)
        reports.append(
            AnomalyReport(
                target=d.isoformat(),
                score=score,
                threshold=threshold,
                verdict="flagged" if score > threshold else "clean",
                detector="poisoning",
            )
        )
    return reports


def detect_evasion(
    instance: Mapping[str, float],
    stats: TrainingStats,
    threshold: float = DEFAULT_EVASION_THRESHOLD,
) -> AnomalyReport:
    """Max robust z over the features shared between instance and stats."""
    if threshold <= 0:
        raise UsageError("evasion threshold must be positive")
    shared = [name for name in instance if name in stats.features]
    if not shared:
        raise DetectorUnavailableError(
            "instance shares no features with the training statistics"
        )
    score = max(
        robust_z(float(instance[name]), stats.features[name].median, stats.features[name].mad)
        for name in shared
    )
    return AnomalyReport(
        target="instance",
        score=score,
        threshold=threshold,
        verdict="flagged" if score > threshold else "clean",
        detector="evasion",
    )


# ---------------------------------------------------------------------------
# quarantine
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuarantineEntry:
    series_id: str
    day: date
    score: float


class QuarantineStore:
    """Flagged training points, excluded from every training window until an
    admin releases them (release is an audited action)."""

    def __init__(self):
        self._entries: dict[tuple[str, date], QuarantineEntry] = {}
        self._lock = threading.Lock()

    def flag(self, series_id: str, day: date, score: float) -> QuarantineEntry:
        entry = QuarantineEntry(series_id, day, float(score))
        with self._lock:
            self._entries[(series_id, day)] = entry
        return entry

    def release(self, series_id: str, day: date) -> bool:
        with self._lock:
            return self._entries.pop((series_id, day), None) is not None

    def is_quarantined(self, series_id: str, day: date) -> bool:
        with self._lock:
            return (series_id, day) in self._entries

    def dates_for(self, series_id: str) -> frozenset[date]:
        with self._lock:
            return frozenset(day for sid, day in self._entries if sid == series_id)

    def entries(self) -> list[QuarantineEntry]:
        with self._lock:
            return sorted(self._entries.values(), key=lambda e: (e.series_id, e.day))
