"""Async job records and a per-key FIFO runner for long-running work."""

from __future__ import annotations

import threading
import traceback
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable

from .errors import UsageError

JOB_KINDS = ("train", "backtest", "explain_batch")
_TRANSITIONS = {"queued": ("running",), "running": ("done", "failed")}


@dataclass
class JobRecord:
    job_id: str
    kind: str
    key: str
    status: str = "queued"
    result: Any = None
    error: str | None = None
    created_at: str = ""
    finished_at: str = ""

    def advance(self, status: str):
        if status not in _TRANSITIONS.get(self.status, ()):
            raise UsageError(f"illegal job transition {self.status} -> {status}")
        self.status = status

    def to_payload(self) -> dict:
        return {
            "job_id": self.job_id,
            "kind": self.kind,
            "key": self.key,
            "status": self.status,
            "result": self.result,
            "error": self.error,
            "created_at": self.created_at,
            "finished_at": self.finished_at,
        }


class JobRunner:
    """FIFO execution per key; one worker thread per active key.

    A job function returns the result payload; an exception marks the job
    failed without touching previously published state.
    """

    def __init__(self, clock: Callable[[], str] | None = None):
        self._jobs: dict[str, JobRecord] = {}
        self._queues: dict[str, deque] = {}
        self._active: set[str] = set()
        self._lock = threading.Lock()
        self._counter = 0
        self._clock = clock or (lambda: "")

    def submit(self, kind: str, key: str, fn: Callable[[], Any]) -> JobRecord:
        if kind not in JOB_KINDS:
            raise UsageError(f"unknown job kind {kind!r}")
        with self._lock:
            self._counter += 1
            job = JobRecord(
                job_id=f"job-{self._counter:06d}", kind=kind, key=key,
                created_at=self._clock(),
            )
            self._jobs[job.job_id] = job
            self._queues.setdefault(key, deque()).append((job, fn))
            if key not in self._active:
                self._active.add(key)
                threading.Thread(target=self._drain, args=(key,), daemon=True).start()
        return job

    def _drain(self, key: str):
        while True:
            with self._lock:
                queue = self._queues.get(key)
                if not queue:
                    self._active.discard(key)
                    return
                job, fn = queue.popleft()
                job.advance("running")
            try:
                result = fn()
            except Exception:
                with self._lock:
                    job.error = traceback.format_exc(limit=3)
                    job.advance("failed")
                    job.finished_at = self._clock()
            else:
                with self._lock:
                    job.result = result
                    job.advance("done")
                    job.finished_at = self._clock()

    def run_inline(self, kind: str, key: str, fn: Callable[[], Any]) -> JobRecord:
        """Synchronous variant for the CLI; records the same lifecycle."""
        if kind not in JOB_KINDS:
            raise UsageError(f"unknown job kind {kind!r}")
        with self._lock:
            self._counter += 1
            job = JobRecord(
                job_id=f"job-{self._counter:06d}", kind=kind, key=key,
                created_at=self._clock(),
            )
            self._jobs[job.job_id] = job
            job.advance("running")
        try:
            job.result = fn()
            job.advance("done")
        except Exception:
            job.error = traceback.format_exc(limit=3)
            job.advance("failed")
        job.finished_at = self._clock()
        return job

    def get(self, job_id: str) -> JobRecord | None:
        with self._lock:
            return self._jobs.get(job_id)

    def wait(self, job_id: str, timeout: float = 30.0) -> JobRecord:
        import time

        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            job = self.get(job_id)
            if job and job.status in ("done", "failed"):
                return job
            time.sleep(0.01)
        raise TimeoutError(f"job {job_id} did not finish within {timeout}s")
