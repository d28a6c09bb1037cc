"""Composition root: wires every module behind one object with durable state.

The service layer and the CLI both drive a :class:`Platform`. All writes are
serialized behind one lock; training runs as per-(series, model) FIFO jobs
that publish a new model version atomically (file write before registry
publish, so an interrupted job leaves the previous version intact).
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from dataclasses import replace
from datetime import date, datetime, timedelta, timezone
from typing import Any, Callable, Mapping

import numpy as np

from . import scenarios as sim
from .active_learning import (
    Candidate,
    Committee,
    CorrectionRecord,
    LabelQueue,
    QueryItem,
    acquisition_score,
    build_committee,
    select_batch,
)
from .config import PlatformConfig
from .decisions import DecisionContext, TransportOption, recommend
from .errors import (
    DataValidationError,
    HistoryError,
    NotExplainableError,
    UsageError,
)
from .explain import Explanation, LocalSurrogateExplainer, explanation_quality
from .feedback import FeedbackEvent, FeedbackLog, UserProfile
from .forecasting import (
    Forecast,
    ForecastRequest,
    ModelRecord,
    ModelRegistry,
    backtest,
    fit_model,
    forecaster_from_record,
    predict_from_record,
)
from .graph import Entity, TripleStore
from .jobs import JobRecord, JobRunner
from .security import (
    AuditLog,
    FeatureStat,
    QuarantineStore,
    TrainingStats,
    authorize,
    detect_evasion,
    detect_poisoning,
)
from .series import (
    MIN_FEATURE_HISTORY,
    TimeSeries,
    featurize,
    parse_series_csv,
    series_to_csv,
)

MIN_SCREENING_HISTORY = 12


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _atomic_write(path: str, data: str):
    directory = os.path.dirname(path)
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except Exception:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _append_jsonl(path: str, doc: Mapping[str, Any]):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, sort_keys=True) + "\n")


def _read_jsonl(path: str) -> list[dict]:
    if not os.path.exists(path):
        return []
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


class Platform:
    """All platform modules behind one API, with flat-file persistence."""

    def __init__(self, config: PlatformConfig, clock: Callable[[], str] = utc_now):
        self.config = config
        self.clock = clock
        self.data_dir = os.path.abspath(config.data_dir)
        os.makedirs(self.data_dir, exist_ok=True)
        self._lock = threading.RLock()

        self.audit = AuditLog(os.path.join(self.data_dir, "audit.log"))
        self.graph = TripleStore()
        self.registry = ModelRegistry()
        self.quarantine = QuarantineStore()
        self.jobs = JobRunner(clock)

        self.series_raw: dict[str, TimeSeries] = {}
        self.corrections: dict[str, dict[date, CorrectionRecord]] = {}
        self.forecasts: dict[str, Forecast] = {}
        self.explanations: dict[str, Explanation] = {}
        self.scenarios: dict[str, sim.Scenario] = {}
        self.decision_ids: set[str] = set()
        self.chosen_options: list[dict] = []
        self.last_model_key: dict[str, str] = {}
        self.last_retrain_job: JobRecord | None = None
        self._counters = {"forecast": 0, "explanation": 0, "scenario": 0}
        self._committees: dict[str, tuple[int, Committee]] = {}

        self.queue = LabelQueue(on_label=self._on_label)
        self.feedback = FeedbackLog(
            target_exists=self._target_exists,
            routes={
                "rating": self._route_rating,
                "label": self._route_label,
                "chosen_option": self._route_chosen_option,
                "verdict": self._route_verdict,
            },
            on_append=self._persist_feedback_event,
        )

        for user in config.users:
            self.graph.upsert_entity(Entity(user.user_id, "User", {"role": user.role}))
        self._load_state()

    # -- paths ----------------------------------------------------------------

    def _path(self, *parts: str) -> str:
        return os.path.join(self.data_dir, *parts)

    # -- identity / authorization ----------------------------------------------

    def user_for_token(self, token: str) -> UserProfile | None:
        return self.config.user_for_token(token)

    def authorize_or_audit(self, user: UserProfile | None, action: str, payload: bytes) -> bool:
        """Default-deny check; every denial (and unknown action) is audited."""
        actor = user.user_id if user else "anonymous"
        if user is None or not authorize(user.role, action):
            self.audit.append(actor, f"deny:{action}", payload)
            return False
        return True

    def guarded(self, user: UserProfile, action: str, payload: bytes):
        """Audit a permitted mutating call before its handler runs."""
        self.audit.append(user.user_id, action, payload)

    # -- series ingest -----------------------------------------------------------

    def effective_series(self, series_id: str) -> TimeSeries:
        raw = self.series_raw.get(series_id)
        if raw is None:
            raise UsageError(f"unknown series {series_id!r}")
        fixes = self.corrections.get(series_id)
        if not fixes:
            return raw
        return raw.with_points({d: rec.value for d, rec in fixes.items()})

    def ingest_series_csv(self, text: str, actor: str = "system") -> dict[str, Any]:
        """Parse, screen for poisoning, and merge incoming daily series.

        Screening statistics come from the accepted history plus the incoming
        batch; flagged points are quarantined (stored, but excluded from every
        training window until released). Re-ingesting identical data adds
        nothing.
        """
        parsed = parse_series_csv(text)
        report: dict[str, Any] = {}
        with self._lock:
            for sid, incoming in parsed.items():
                existing = self.series_raw.get(sid)
                new_points: list[tuple[date, float]] = []
                changed = 0
                for d, v in zip(incoming.dates, incoming.values):
                    old = existing.value_at(d) if existing else None
                    if old is None:
                        new_points.append((d, v))
                    elif old != v:
                        new_points.append((d, v))
                        changed += 1
                flagged = []
                if new_points:
                    accepted_values = []
                    if existing is not None:
                        quarantined = self.quarantine.dates_for(sid)
                        accepted_values = [
                            v for d, v in zip(existing.dates, existing.values)
                            if d not in quarantined
                        ]
                    basis = np.array(accepted_values + [v for _, v in new_points])
                    if len(basis) >= MIN_SCREENING_HISTORY:
                        stats = TrainingStats.from_data([], basis)
                        for rep in detect_poisoning(
                            new_points, stats, self.config.poisoning_threshold
                        ):
                            if rep.flagged:
                                d = date.fromisoformat(rep.target)
                                self.quarantine.flag(sid, d, rep.score)
                                flagged.append({"date": rep.target, "score": round(rep.score, 3)})
                    merged = existing.with_points(dict(new_points)) if existing else incoming
                    self.series_raw[sid] = merged
                    _atomic_write(self._path("series", f"{sid}.csv"), series_to_csv(merged))
                    self._persist_quarantine()
                self.graph.upsert_entity(
                    Entity(sid, "SeriesRef", {"points": len(self.series_raw[sid])})
                )
                self._persist_graph()
                report[sid] = {
                    "new_points": len(new_points) - changed,
                    "updated_points": changed,
                    "quarantined": flagged,
                }
        return report

    def ingest_graph_csv(self, text: str, mapping: Mapping[str, Any]) -> dict[str, int]:
        with self._lock:
            rep = self.graph.ingest_csv(text, mapping)
            self._persist_graph()
            return {
                "entities_created": rep.entities_created,
                "triples_created": rep.triples_created,
                "total": rep.total,
            }

    # -- training ---------------------------------------------------------------

    def train(
        self,
        series_id: str,
        model_key: str,
        folds: int | None = None,
        scenario_ids: tuple[str, ...] = (),
        sync: bool = False,
    ) -> JobRecord:
        if series_id not in self.series_raw:
            raise UsageError(f"unknown series {series_id!r}")
        fn = lambda: self._run_training(series_id, model_key, folds, scenario_ids)
        key = f"{series_id}:{model_key}"
        if sync:
            return self.jobs.run_inline("train", key, fn)
        return self.jobs.submit("train", key, fn)

    def _run_training(
        self,
        series_id: str,
        model_key: str,
        folds: int | None,
        scenario_ids: tuple[str, ...],
    ) -> dict[str, Any]:
        with self._lock:
            series = self.effective_series(series_id)
            excluded = self.quarantine.dates_for(series_id)
            version = self.registry.next_version(series_id, model_key)
            pseudo_rows = []
            if scenario_ids:
                chosen = [self._require_scenario(sid) for sid in scenario_ids]
                aug = sim.augment(series, chosen, self.config.augment_weight)
                pseudo_rows = aug.pseudo_rows()
        record = fit_model(
            series,
            model_key,
            version,
            self.config.model_config(),
            excluded,
            folds,
            pseudo_rows,
            created_at=self.clock(),
        )
        with self._lock:
            self._persist_model(record)  # durable before publish
            self.registry.publish(record)
            self.last_model_key[series_id] = model_key
            self._refresh_queue(series_id)
        return {"series_id": series_id, "model_key": model_key, "version": record.version}

    def run_backtest(self, series_id: str, model_key: str, folds: int) -> dict[str, Any]:
        series = self.effective_series(series_id)
        excluded = self.quarantine.dates_for(series_id)
        report = backtest(
            series.without_dates(excluded), model_key, folds,
            self.config.model_config(), excluded,
        )
        return {
            "series_id": series_id,
            "model_key": model_key,
            "folds": [
                {"fold": f.fold, "cut_date": f.cut_date.isoformat(), "mae": round(f.mae, 6)}
                for f in report.folds
            ],
            "csv": report.to_csv(),
        }

    # -- forecasting ---------------------------------------------------------------

    def _next_id(self, kind: str, prefix: str) -> str:
        self._counters[kind] += 1
        return f"{prefix}-{self._counters[kind]:06d}"

    def forecast(
        self,
        series_id: str,
        model_key: str,
        as_of: date,
        horizon: int,
    ) -> Forecast:
        with self._lock:
            record = self.registry.latest(series_id, model_key)
            if record is None:
                raise UsageError(f"no trained {model_key} model for series {series_id!r}")
            series = self.effective_series(series_id)
            request = ForecastRequest(series_id, as_of, horizon, model_key)
            fc_id = self._next_id("forecast", "fc")
            forecast = predict_from_record(
                record, series, request, fc_id,
                coverage=self.config.coverage,
                horizon_cap=self.config.horizon_cap,
                model_config=self.config.model_config(),
                created_at=self.clock(),
            )
            forecast = self._attach_trust_warning(forecast, record, series)
            self.forecasts[fc_id] = forecast
            doc = forecast.to_payload()
            doc.update(  # storage keeps full precision, unlike the wire form
                point=list(forecast.point), lower=list(forecast.lower), upper=list(forecast.upper)
            )
            _append_jsonl(self._path("forecasts.jsonl"), doc)
            self.graph.upsert_entity(Entity(fc_id, "ForecastRef", {"model": model_key}))
            self.graph.upsert_entity(Entity(series_id, "SeriesRef"))
            self.graph.add(series_id, "hasForecast", fc_id, is_ref=True)
            self._persist_graph()
            return forecast

    def _attach_trust_warning(
        self, forecast: Forecast, record: ModelRecord, series: TimeSeries
    ) -> Forecast:
        if record.stats is None or not record.stats.features:
            return forecast
        history = series.up_to(forecast.as_of)
        try:
            instance = featurize(history, history.end + timedelta(days=1))
        except HistoryError:
            return forecast
        report = detect_evasion(instance, record.stats, self.config.evasion_threshold)
        if not report.flagged:
            return forecast
        if self.config.evasion_blocking:
            raise DataValidationError(
                f"evasion detector blocked the forecast (score {report.score:.2f} "
                f"> {report.threshold:g}); disable security.evasion_blocking to warn instead"
            )
        warning = {
            "detector": "evasion",
            "score": round(report.score, 3),
            "threshold": report.threshold,
            "message": "serving instance deviates strongly from the training window",
        }
        return replace(forecast, trust_warning=warning)

    def get_forecast(self, forecast_id: str) -> Forecast:
        fc = self.forecasts.get(forecast_id)
        if fc is None:
            raise UsageError(f"unknown forecast {forecast_id!r}")
        return fc

    # -- explanations -----------------------------------------------------------

    def explain(
        self,
        forecast_id: str,
        audience: UserProfile,
        seed: int = 0,
        sigma: float | None = None,
    ) -> Explanation:
        with self._lock:
            forecast = self.get_forecast(forecast_id)
            record = self.registry.get(forecast.series_id, forecast.model_key, forecast.model_version)
            if record is None:
                raise UsageError("the forecast's model version is no longer available")
            forecaster = forecaster_from_record(record, self.config.model_config())
            if forecaster.feature_names is None:
                raise NotExplainableError(
                    f"{forecast.model_key} has no feature interface; explanations are "
                    "defined for feature-based models only"
                )
            if record.stats is None or not record.stats.features:
                raise UsageError("the model record carries no training statistics")
            series = self.effective_series(forecast.series_id)
            history = series.up_to(forecast.as_of)
            full_instance = featurize(history, history.end + timedelta(days=1))
            names = list(forecaster.feature_names)
            instance = {name: full_instance[name] for name in names}
            stds = {
                name: record.stats.features[name].std
                for name in names
                if name in record.stats.features
            }
            if forecast.model_key == "holt_winters":
                forecaster.fit(history)
            explainer = LocalSurrogateExplainer(
                n_samples=self.config.n_samples,
                surrogate_lambda=self.config.surrogate_lambda,
                sigma=sigma,
            )
            intercept, ranked, r2, sigma_used = explainer.explain_instance(
                instance, forecaster.predict_features, stds, seed
            )
            redacted = tuple(name for name, _ in ranked if not audience.can_see(name))
            ex_id = self._next_id("explanation", "ex")
            explanation = Explanation(
                explanation_id=ex_id,
                forecast_id=forecast_id,
                instance=instance,
                intercept=intercept,
                attributions=tuple(ranked),
                fidelity_r2=r2,
                kernel_sigma=sigma_used,
                n_samples=self.config.n_samples,
                seed=seed,
                audience_role=audience.role,
                redacted_features=redacted,
            )
            self.explanations[ex_id] = explanation
            self._persist_explanation(explanation)
            self.graph.upsert_entity(Entity(ex_id, "ExplanationRef"))
            self.graph.add(ex_id, "explains", forecast_id, is_ref=True)
            self._persist_graph()
            return explanation

    def get_explanation(self, explanation_id: str) -> Explanation:
        ex = self.explanations.get(explanation_id)
        if ex is None:
            raise UsageError(f"unknown explanation {explanation_id!r}")
        return ex

    def explanation_quality_report(self, explanation_id: str):
        explanation = self.get_explanation(explanation_id)
        events = self.feedback.events_for("explanation", explanation_id)
        return explanation_quality(explanation, events)

    # -- active learning -----------------------------------------------------------

    def _committee_for(self, series_id: str) -> Committee:
        series = self.effective_series(series_id)
        excluded = self.quarantine.dates_for(series_id)
        stamp = len(series)
        cached = self._committees.get(series_id)
        if cached and cached[0] == stamp:
            return cached[1]
        committee = build_committee(
            series, "ridge_lags", self.config.committee_size,
            self.config.queue_seed, self.config.ridge_lambda, excluded,
        )
        self._committees[series_id] = (stamp, committee)
        return committee

    def _refresh_queue(self, series_id: str):
        """Rebuild the pending labeling batch for a series after training."""
        series = self.effective_series(series_id)
        if len(series) < 2 * MIN_FEATURE_HISTORY:
            return
        try:
            committee = self._committee_for(series_id)
        except (UsageError, HistoryError):
            return
        known = {item.item_id for item in self.queue.all_items()}
        candidates = []
        for idx, d in enumerate(series.dates):
            if idx < MIN_FEATURE_HISTORY:
                continue
            cand = Candidate(series_id, d, featurize(series, d))
            if cand.item_id not in known:
                candidates.append(cand)
        candidates = candidates[-60:]
        scored = [
            (cand, acquisition_score(cand, committee, "ensemble_std"))
            for cand in candidates
        ]
        items = select_batch(
            scored, self.config.batch_size, self.config.min_gap_days,
            "ensemble_std", created_at=self.clock(),
        )
        self.queue.add_items(items)
        self._persist_queue()

    def queue_payload(self, series_id: str | None = None) -> list[dict]:
        return [
            {
                "item_id": i.item_id,
                "series_id": i.series_id,
                "date": i.day.isoformat(),
                "score": round(i.acquisition_score, 6),
                "strategy": i.strategy,
                "status": i.status,
            }
            for i in self.queue.pending(series_id)
        ]

    def al_label(self, item_id: str, value: float, user: UserProfile) -> QueryItem:
        """Label a pending queue item (routed through the feedback log so the
        event history stays unified)."""
        self.feedback.record(user, "query_item", item_id, "label", value, self.clock())
        item = self.queue.get(item_id)
        self._persist_queue()
        return item

    def _on_label(self, record: CorrectionRecord):
        with self._lock:
            self.corrections.setdefault(record.series_id, {})[record.day] = record
            _append_jsonl(
                self._path("corrections.jsonl"),
                {
                    "series_id": record.series_id,
                    "date": record.day.isoformat(),
                    "value": record.value,
                    "user_id": record.user_id,
                    "created_at": record.created_at,
                },
            )
            self.audit.append(record.user_id, "label", json.dumps(
                {"series_id": record.series_id, "date": record.day.isoformat(),
                 "value": record.value}).encode())
        # retrain trigger: the next version for this series' active model
        model_key = self.last_model_key.get(record.series_id)
        if model_key:
            self.last_retrain_job = self.train(record.series_id, model_key)

    # -- scenarios ---------------------------------------------------------------

    def generate_scenario(
        self, series_id: str, spec: sim.PerturbationSpec, forecast_id: str | None = None
    ) -> sim.Scenario:
        with self._lock:
            series = self.effective_series(series_id)
            sc_id = self._next_id("scenario", "sc")
            scenario = sim.generate(series, spec, sc_id, forecast_id)
            self.scenarios[sc_id] = scenario
            self._persist_scenarios()
            self.graph.upsert_entity(Entity(sc_id, "ScenarioRef", {"kind": spec.kind}))
            self.graph.upsert_entity(Entity(series_id, "SeriesRef"))
            self.graph.add(sc_id, "perturbs", series_id, is_ref=True)
            self._persist_graph()
            return scenario

    def assess_scenario(self, scenario_id: str) -> sim.Scenario:
        with self._lock:
            scenario = self._require_scenario(scenario_id)
            record = self.registry.latest(scenario.series_id, "ridge_lags")
            if record is None or record.stats is None:
                raise UsageError(
                    "scenario assessment needs a trained ridge_lags model for the series"
                )
            committee = self._committee_for(scenario.series_id)
            scenario = sim.assess(
                scenario, committee, record.stats, self.config.novelty_threshold
            )
            self._persist_scenarios()
            return scenario

    def _require_scenario(self, scenario_id: str) -> sim.Scenario:
        scenario = self.scenarios.get(scenario_id)
        if scenario is None:
            raise UsageError(f"unknown scenario {scenario_id!r}")
        return scenario

    # -- decisions ---------------------------------------------------------------

    def recommend_options(self, payload: Mapping[str, Any]) -> list[dict]:
        forecast = self.get_forecast(str(payload.get("forecast_id", "")))
        options = []
        for entry in payload.get("transport_options", []):
            options.append(
                TransportOption(
                    mode=str(entry.get("mode", "")),
                    lead_time=int(entry.get("lead_time", 0)),
                    fixed_cost=float(entry.get("fixed_cost", 0.0)),
                )
            )
        risk_flags = [str(f) for f in payload.get("risk_flags", [])]
        for sc_id in payload.get("scenario_ids", []):
            scenario = self._require_scenario(str(sc_id))
            if scenario.tag:
                risk_flags.append(f"scenario:{scenario.scenario_id}:{scenario.tag}")
        ctx = DecisionContext(
            series_id=forecast.series_id,
            forecast_id=forecast.forecast_id,
            on_hand=float(payload.get("on_hand", 0.0)),
            unit_holding_cost=float(payload.get("unit_holding_cost", 0.0)),
            unit_stockout_penalty=float(payload.get("unit_stockout_penalty", 0.0)),
            transport_options=tuple(options),
            risk_flags=tuple(risk_flags),
        )
        explanation = None
        if payload.get("explanation_id"):
            explanation = self.get_explanation(str(payload["explanation_id"]))
        ranked = recommend(ctx, forecast, explanation)
        with self._lock:
            for option in ranked:
                self.decision_ids.add(option.option_id)
            _append_jsonl(
                self._path("decisions.jsonl"),
                {
                    "forecast_id": forecast.forecast_id,
                    "options": [o.to_payload() for o in ranked],
                    "created_at": self.clock(),
                },
            )
            top = ranked[0] if ranked else None
            if top is not None:
                self.graph.upsert_entity(Entity(top.option_id, "DecisionRef"))
                self.graph.add(top.option_id, "recommendsFor", forecast.forecast_id, is_ref=True)
                self._persist_graph()
        return [o.to_payload() for o in ranked]

    # -- feedback ---------------------------------------------------------------

    def record_feedback(self, user: UserProfile, payload: Mapping[str, Any]) -> FeedbackEvent:
        signal_kind = str(payload.get("signal_kind", ""))
        value = payload.get("value")
        if signal_kind == "rating" and isinstance(value, float) and value.is_integer():
            value = int(value)
        event = self.feedback.record(
            user,
            str(payload.get("target_kind", "")),
            str(payload.get("target_id", "")),
            signal_kind,
            value,
            self.clock(),
        )
        return event

    def _target_exists(self, kind: str, target_id: str) -> bool:
        if kind == "forecast":
            return target_id in self.forecasts
        if kind == "explanation":
            return target_id in self.explanations
        if kind == "scenario":
            return target_id in self.scenarios
        if kind == "decision":
            return target_id in self.decision_ids
        if kind == "query_item":
            return self.queue.get(target_id) is not None
        return False

    def _route_rating(self, event: FeedbackEvent):
        # quality reports pull rating events on demand; nothing to push here
        return None

    def _route_label(self, event: FeedbackEvent):
        if event.target_kind != "query_item":
            raise DataValidationError("label feedback must target a query_item")
        self.queue.submit_label(event.target_id, float(event.value), event.user_id, event.timestamp)

    def _route_chosen_option(self, event: FeedbackEvent):
        if event.target_kind != "decision":
            raise DataValidationError("chosen_option feedback must target a decision")
        self.chosen_options.append(
            {"option_id": event.value, "decision_id": event.target_id,
             "user_id": event.user_id, "timestamp": event.timestamp}
        )

    def _route_verdict(self, event: FeedbackEvent):
        if event.target_kind != "scenario":
            raise DataValidationError("plausibility verdicts must target a scenario")
        scenario = self._require_scenario(event.target_id)
        scenario.human_verdict = str(event.value)
        self._persist_scenarios()

    def _persist_feedback_event(self, event: FeedbackEvent):
        _append_jsonl(self._path("feedback.jsonl"), event.to_payload())
        entity_kind = {
            "forecast": "ForecastRef",
            "explanation": "ExplanationRef",
            "scenario": "ScenarioRef",
            "decision": "DecisionRef",
        }.get(event.target_kind)
        if entity_kind and self.graph.has_entity(event.target_id):
            self.graph.upsert_entity(Entity(event.event_id, "FeedbackRef"))
            self.graph.add(event.event_id, "about", event.target_id, is_ref=True)
            self._persist_graph()

    # -- audit / graph ------------------------------------------------------------

    def audit_verify(self) -> dict[str, Any]:
        broken = self.audit.verify()
        return {"ok": broken is None, "first_broken_seq": broken, "records": len(self.audit)}

    def release_quarantine(self, series_id: str, day: date, admin: UserProfile) -> bool:
        if admin.role != "admin":
            raise UsageError("quarantine release is an admin action")
        released = self.quarantine.release(series_id, day)
        if released:
            self.audit.append(
                admin.user_id,
                "quarantine_release",
                json.dumps({"series_id": series_id, "date": day.isoformat()}).encode(),
            )
            self._persist_quarantine()
        return released

    def graph_query(
        self, subject: str | None = None, predicate: str | None = None, object: Any = None
    ) -> list[dict]:
        triples = self.graph.query(subject, predicate, object)
        return [
            {
                "subject": t.subject,
                "predicate": t.predicate,
                "object": t.object.isoformat() if isinstance(t.object, date) else t.object,
                "object_is_ref": t.object_is_ref,
            }
            for t in triples
        ]

    # -- persistence ---------------------------------------------------------------

    def _persist_graph(self):
        _atomic_write(self._path("graph.tsv"), self.graph.export_text())

    def _persist_quarantine(self):
        doc = [
            {"series_id": e.series_id, "date": e.day.isoformat(), "score": e.score}
            for e in self.quarantine.entries()
        ]
        _atomic_write(self._path("quarantine.json"), json.dumps(doc, indent=2))

    def _persist_queue(self):
        doc = [
            {
                "item_id": i.item_id,
                "series_id": i.series_id,
                "date": i.day.isoformat(),
                "score": i.acquisition_score,
                "strategy": i.strategy,
                "status": i.status,
                "created_at": i.created_at,
                "label": i.label,
            }
            for i in self.queue.all_items()
        ]
        _atomic_write(self._path("queue.json"), json.dumps(doc, indent=2))

    def _persist_scenarios(self):
        doc = []
        for s in self.scenarios.values():
            entry = s.to_payload()
            entry["forecast_id"] = s.forecast_id
            entry["perturbed"] = [
                {"date": d.isoformat(), "value": v}
                for d, v in zip(s.perturbed.dates, s.perturbed.values)
            ]
            doc.append(entry)
        _atomic_write(self._path("scenarios.json"), json.dumps(doc, indent=2))

    def _persist_model(self, record: ModelRecord):
        doc = {
            "model_key": record.model_key,
            "series_id": record.series_id,
            "version": record.version,
            "parameters": dict(record.parameters),
            "train_start": record.train_start.isoformat(),
            "train_end": record.train_end.isoformat(),
            "n_obs": record.n_obs,
            "excluded_dates": [d.isoformat() for d in record.excluded_dates],
            "residuals": list(record.residuals),
            "created_at": record.created_at,
            "stats": _stats_to_doc(record.stats),
        }
        path = self._path(
            "models", f"{record.series_id}__{record.model_key}__v{record.version}.json"
        )
        _atomic_write(path, json.dumps(doc, indent=2))

    def _persist_explanation(self, explanation: Explanation):
        doc = {
            "explanation_id": explanation.explanation_id,
            "forecast_id": explanation.forecast_id,
            "instance": dict(explanation.instance),
            "intercept": explanation.intercept,
            "attributions": [[n, w] for n, w in explanation.attributions],
            "fidelity_r2": explanation.fidelity_r2,
            "kernel_sigma": explanation.kernel_sigma,
            "n_samples": explanation.n_samples,
            "seed": explanation.seed,
            "audience_role": explanation.audience_role,
            "redacted_features": list(explanation.redacted_features),
        }
        _append_jsonl(self._path("explanations.jsonl"), doc)

    def _load_state(self):
        series_dir = self._path("series")
        if os.path.isdir(series_dir):
            for name in sorted(os.listdir(series_dir)):
                if name.endswith(".csv"):
                    with open(os.path.join(series_dir, name), "r", encoding="utf-8") as fh:
                        for sid, series in parse_series_csv(fh.read()).items():
                            self.series_raw[sid] = series
        for doc in _read_jsonl(self._path("corrections.jsonl")):
            record = CorrectionRecord(
                doc["series_id"], date.fromisoformat(doc["date"]),
                doc["value"], doc["user_id"], doc.get("created_at", ""),
            )
            self.corrections.setdefault(record.series_id, {})[record.day] = record
        qpath = self._path("quarantine.json")
        if os.path.exists(qpath):
            with open(qpath, "r", encoding="utf-8") as fh:
                for entry in json.load(fh):
                    self.quarantine.flag(
                        entry["series_id"], date.fromisoformat(entry["date"]), entry["score"]
                    )
        models_dir = self._path("models")
        if os.path.isdir(models_dir):
            docs = []
            for name in os.listdir(models_dir):
                if name.endswith(".json"):
                    with open(os.path.join(models_dir, name), "r", encoding="utf-8") as fh:
                        docs.append(json.load(fh))
            docs.sort(key=lambda d: (d["series_id"], d["model_key"], d["version"]))
            for doc in docs:
                record = ModelRecord(
                    model_key=doc["model_key"],
                    series_id=doc["series_id"],
                    version=doc["version"],
                    parameters=doc["parameters"],
                    train_start=date.fromisoformat(doc["train_start"]),
                    train_end=date.fromisoformat(doc["train_end"]),
                    n_obs=doc["n_obs"],
                    excluded_dates=tuple(date.fromisoformat(d) for d in doc["excluded_dates"]),
                    residuals=tuple(doc["residuals"]),
                    stats=_stats_from_doc(doc.get("stats")),
                    created_at=doc.get("created_at", ""),
                )
                self.registry.publish(record)
                self.last_model_key[record.series_id] = record.model_key
        gpath = self._path("graph.tsv")
        if os.path.exists(gpath):
            with open(gpath, "r", encoding="utf-8") as fh:
                self.graph.import_lines(fh)
        for doc in _read_jsonl(self._path("forecasts.jsonl")):
            fc = Forecast(
                forecast_id=doc["forecast_id"],
                series_id=doc["series_id"],
                as_of=date.fromisoformat(doc["as_of"]),
                horizon=doc["horizon"],
                model_key=doc["model_key"],
                model_version=doc["model_version"],
                point=tuple(doc["point"]),
                lower=tuple(doc["lower"]),
                upper=tuple(doc["upper"]),
                coverage=doc["coverage"],
                created_at=doc.get("created_at", ""),
                trust_warning=doc.get("trust_warning"),
            )
            self.forecasts[fc.forecast_id] = fc
        for doc in _read_jsonl(self._path("explanations.jsonl")):
            ex = Explanation(
                explanation_id=doc["explanation_id"],
                forecast_id=doc["forecast_id"],
                instance=doc["instance"],
                intercept=doc["intercept"],
                attributions=tuple((n, w) for n, w in doc["attributions"]),
                fidelity_r2=doc["fidelity_r2"],
                kernel_sigma=doc["kernel_sigma"],
                n_samples=doc["n_samples"],
                seed=doc["seed"],
                audience_role=doc["audience_role"],
                redacted_features=tuple(doc["redacted_features"]),
            )
            self.explanations[ex.explanation_id] = ex
        spath = self._path("scenarios.json")
        if os.path.exists(spath):
            with open(spath, "r", encoding="utf-8") as fh:
                for entry in json.load(fh):
                    spec = sim.PerturbationSpec(
                        kind=entry["kind"], magnitude=entry["magnitude"],
                        window_start=entry["window_start"], window_len=entry["window_len"],
                        seed=entry["seed"],
                    )
                    dates = tuple(date.fromisoformat(p["date"]) for p in entry["perturbed"])
                    values = tuple(p["value"] for p in entry["perturbed"])
                    scenario = sim.Scenario(
                        scenario_id=entry["scenario_id"],
                        series_id=entry["series_id"],
                        spec=spec,
                        window_dates=tuple(date.fromisoformat(p["date"]) for p in entry["window"]),
                        window_values=tuple(p["value"] for p in entry["window"]),
                        perturbed=TimeSeries(entry["series_id"], dates, values),
                        forecast_id=entry.get("forecast_id"),
                        model_confidence=entry.get("confidence"),
                        novelty_score=entry.get("novelty"),
                        tag=entry.get("tag"),
                        human_verdict=entry.get("human_verdict"),
                    )
                    self.scenarios[scenario.scenario_id] = scenario
        queue_path = self._path("queue.json")
        if os.path.exists(queue_path):
            with open(queue_path, "r", encoding="utf-8") as fh:
                items = []
                for entry in json.load(fh):
                    item = QueryItem(
                        item_id=entry["item_id"],
                        series_id=entry["series_id"],
                        day=date.fromisoformat(entry["date"]),
                        acquisition_score=entry["score"],
                        strategy=entry["strategy"],
                        status=entry["status"],
                        created_at=entry.get("created_at", ""),
                        label=entry.get("label"),
                    )
                    items.append(item)
                self.queue.add_items(items)
        for doc in _read_jsonl(self._path("decisions.jsonl")):
            for option in doc.get("options", []):
                self.decision_ids.add(option["option_id"])
        for prefix, kind in (("fc", "forecast"), ("ex", "explanation"), ("sc", "scenario")):
            store = {
                "forecast": self.forecasts,
                "explanation": self.explanations,
                "scenario": self.scenarios,
            }[kind]
            top = 0
            for key in store:
                try:
                    top = max(top, int(key.split("-")[-1]))
                except ValueError:
                    continue
            self._counters[kind] = top


def _stats_to_doc(stats: TrainingStats | None):
    if stats is None:
        return None
    return {
        "features": {
            name: [st.median, st.mad, st.mean, st.std]
            for name, st in stats.features.items()
        },
        "series": [stats.series_median, stats.series_mad, stats.series_mean, stats.series_std],
    }


def _stats_from_doc(doc) -> TrainingStats | None:
    if not doc:
        return None
    features = {
        name: FeatureStat(*vals) for name, vals in doc.get("features", {}).items()
    }
    med, mad, mean, std = doc["series"]
    return TrainingStats(
        features=features, series_median=med, series_mad=mad,
        series_mean=mean, series_std=std,
    )
