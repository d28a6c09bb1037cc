"""Explicit and implicit user feedback, user profiles, and feature visibility.

Events are append-only and frozen; each explicit signal kind has exactly one
downstream route (explanation quality, scenario verdicts, AL labels, the
decision log) executed transactionally with the append.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Any, Callable, Mapping

from .errors import DataValidationError, IntegrityError, UsageError

ROLES = ("planner", "manager", "admin")
TARGET_KINDS = ("forecast", "explanation", "decision", "scenario", "query_item")
EXPLICIT_SIGNALS = ("rating", "label", "chosen_option", "verdict")
IMPLICIT_SIGNALS = ("viewed", "dismissed", "dwell")

#: the single downstream consumer of each explicit signal kind
SIGNAL_ROUTES = {
    "rating": "explanation_quality",
    "label": "active_learning.submit_label",
    "chosen_option": "decision_log",
    "verdict": "scenario.human_verdict",
}

DWELL_CAP_MS = 10 * 60 * 1000


@dataclass(frozen=True)
class UserProfile:
    user_id: str
    role: str
    visible_features: tuple[str, ...] = ()
    display_name: str = ""

    def __post_init__(self):
        if self.role not in ROLES:
            raise DataValidationError(f"unknown role {self.role!r}")
        if not self.user_id:
            raise DataValidationError("user_id must be nonempty")

    def can_see(self, feature: str) -> bool:
        return self.role == "admin" or feature in self.visible_features


@dataclass(frozen=True)
class FeedbackEvent:
    event_id: str
    user_id: str
    target_kind: str
    target_id: str
    signal_kind: str
    value: Any = None
    implicit: bool = False
    timestamp: str = ""

    def __post_init__(self):
        if self.target_kind not in TARGET_KINDS:
            raise DataValidationError(f"unknown target kind {self.target_kind!r}")
        if self.signal_kind in EXPLICIT_SIGNALS:
            if self.implicit:
                raise DataValidationError(f"{self.signal_kind} is an explicit signal")
        elif self.signal_kind in IMPLICIT_SIGNALS:
            if not self.implicit:
                raise DataValidationError(f"{self.signal_kind} is an implicit signal")
        else:
            raise DataValidationError(f"unknown signal kind {self.signal_kind!r}")
        self._check_value()

    def _check_value(self):
        kind, value = self.signal_kind, self.value
        if kind == "rating":
            if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 5:
                raise DataValidationError(f"rating must be an integer in 1..5, got {value!r}")
        elif kind == "label":
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value < 0:
                raise DataValidationError(f"label must be a nonnegative number, got {value!r}")
        elif kind == "chosen_option":
            if not isinstance(value, str) or not value:
                raise DataValidationError("chosen_option needs the option id")
        elif kind == "verdict":
            if value not in ("plausible", "implausible"):
                raise DataValidationError(f"verdict must be plausible|implausible, got {value!r}")
        elif kind == "dwell":
            if not isinstance(value, (int, float)) or not math.isfinite(value) or value < 0:
                raise DataValidationError(f"dwell_ms must be nonnegative, got {value!r}")
        elif value is not None and kind in ("viewed", "dismissed"):
            raise DataValidationError(f"{kind} events carry no value")

    def to_payload(self) -> dict[str, Any]:
        return {
            "event_id": self.event_id,
            "user_id": self.user_id,
            "target_kind": self.target_kind,
            "target_id": self.target_id,
            "signal_kind": self.signal_kind,
            "value": self.value,
            "implicit": self.implicit,
            "timestamp": self.timestamp,
        }


@dataclass(frozen=True)
class FeedbackSummary:
    target_kind: str
    target_id: str
    counts: Mapping[str, int]
    explicit_count: int
    implicit_count: int
    mean_rating: float | None
    last_event_at: str | None


class FeedbackLog:
    """Append-only event store with transactional routing.

    ``target_exists(kind, id)`` guards against dangling targets; ``routes``
    maps each explicit signal kind to its downstream handler. A handler
    failure aborts the append.
    """

    def __init__(
        self,
        target_exists: Callable[[str, str], bool] | None = None,
        routes: Mapping[str, Callable[[FeedbackEvent], None]] | None = None,
        on_append: Callable[[FeedbackEvent], None] | None = None,
    ):
        self._events: list[FeedbackEvent] = []
        self._lock = threading.Lock()
        self._counter = 0
        self.target_exists = target_exists
        self.routes = dict(routes or {})
        self.on_append = on_append

    def __len__(self) -> int:
        return len(self._events)

    def _next_id(self) -> str:
        self._counter += 1
        return f"fb-{self._counter:06d}"

    def record(
        self,
        user: UserProfile,
        target_kind: str,
        target_id: str,
        signal_kind: str,
        value: Any = None,
        timestamp: str = "",
    ) -> FeedbackEvent:
        """Store an explicit event and execute its route; implicit kinds are
        accepted too and flagged implicit."""
        implicit = signal_kind in IMPLICIT_SIGNALS
        with self._lock:
            if self.target_exists is not None and not self.target_exists(target_kind, target_id):
                raise IntegrityError(f"feedback target {target_kind}:{target_id} does not exist")
            event = FeedbackEvent(
                event_id=self._next_id(),
                user_id=user.user_id,
                target_kind=target_kind,
                target_id=target_id,
                signal_kind=signal_kind,
                value=value,
                implicit=implicit,
                timestamp=timestamp,
            )
            handler = self.routes.get(signal_kind)
            if handler is not None:
                handler(event)  # a raising route aborts the append
            self._events.append(event)
            if self.on_append is not None:
                self.on_append(event)
            return event

    def implicit_capture(
        self,
        user: UserProfile,
        target_kind: str,
        target_id: str,
        signal_kind: str,
        value: Any = None,
        timestamp: str = "",
    ) -> FeedbackEvent:
        if signal_kind not in IMPLICIT_SIGNALS:
            raise UsageError(f"{signal_kind!r} is not an implicit signal")
        if signal_kind == "dwell" and isinstance(value, (int, float)) and value > DWELL_CAP_MS:
            value = DWELL_CAP_MS
        return self.record(user, target_kind, target_id, signal_kind, value, timestamp)

    def events(self) -> list[FeedbackEvent]:
        with self._lock:
            return list(self._events)

    def events_for(self, target_kind: str, target_id: str) -> list[FeedbackEvent]:
        with self._lock:
            return [
                e for e in self._events
                if e.target_kind == target_kind and e.target_id == target_id
            ]

    def feedback_summary(self, target_kind: str, target_id: str) -> FeedbackSummary:
        events = self.events_for(target_kind, target_id)
        counts: dict[str, int] = {k: 0 for k in EXPLICIT_SIGNALS + IMPLICIT_SIGNALS}
        ratings: list[float] = []
        last = None
        for e in events:
            counts[e.signal_kind] += 1
            if e.signal_kind == "rating":
                ratings.append(float(e.value))
            last = e.timestamp or last
        return FeedbackSummary(
            target_kind=target_kind,
            target_id=target_id,
            counts=counts,
            explicit_count=sum(counts[k] for k in EXPLICIT_SIGNALS),
            implicit_count=sum(counts[k] for k in IMPLICIT_SIGNALS),
            mean_rating=sum(ratings) / len(ratings) if ratings else None,
            last_event_at=last,
        )
