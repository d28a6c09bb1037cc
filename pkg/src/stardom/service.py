"""REST API over the platform.

Every mutating request passes authorize -> audit_append -> handler, in that
order, through one shared guard dependency; denied and anonymous calls are
audited too. Reads require a valid token (except /health) but are not audited.
"""

from __future__ import annotations

from datetime import date
from typing import Any

from fastapi import Depends, FastAPI, Header, HTTPException, Request
from pydantic import BaseModel, Field

from . import scenarios as sim
from .errors import (
    DataValidationError,
    DegenerateLocalityError,
    DetectorUnavailableError,
    EligibilityError,
    HistoryError,
    IntegrityError,
    NotExplainableError,
    NumericalError,
    StardomError,
    StateError,
    UsageError,
)
from .feedback import UserProfile
from .platform import Platform

_STATUS_BY_ERROR: list[tuple[type, int]] = [
    (DataValidationError, 422),
    (IntegrityError, 409),
    (StateError, 409),
    (DegenerateLocalityError, 422),
    (DetectorUnavailableError, 422),
    (EligibilityError, 422),
    (NotExplainableError, 400),
    (HistoryError, 400),
    (NumericalError, 400),
    (UsageError, 400),
]


def _http_error(exc: StardomError) -> HTTPException:
    for etype, status in _STATUS_BY_ERROR:
        if isinstance(exc, etype):
            return HTTPException(status_code=status, detail=str(exc))
    return HTTPException(status_code=500, detail=str(exc))


class IngestSeriesBody(BaseModel):
    csv: str


class IngestGraphBody(BaseModel):
    csv: str
    mapping: dict[str, Any]


class TrainBody(BaseModel):
    series_id: str
    model_key: str
    folds: int | None = None
    scenario_ids: list[str] = Field(default_factory=list)


class ForecastBody(BaseModel):
    series_id: str
    model_key: str
    as_of: date
    horizon: int = Field(ge=1)


class ExplainBody(BaseModel):
    forecast_id: str
    seed: int = 0
    sigma: float | None = None


class LabelBody(BaseModel):
    item_id: str
    value: float


class ScenarioBody(BaseModel):
    series_id: str
    kind: str
    magnitude: float
    window_start: int
    window_len: int
    seed: int = 0
    forecast_id: str | None = None


class RecommendBody(BaseModel):
    forecast_id: str
    on_hand: float = 0.0
    unit_holding_cost: float = 0.0
    unit_stockout_penalty: float = 0.0
    transport_options: list[dict[str, Any]]
    risk_flags: list[str] = Field(default_factory=list)
    scenario_ids: list[str] = Field(default_factory=list)
    explanation_id: str | None = None


class FeedbackBody(BaseModel):
    target_kind: str
    target_id: str
    signal_kind: str
    value: Any = None


def create_app(platform: Platform) -> FastAPI:
    app = FastAPI(title="stardom", version="0.1.0")

    def guard(action: str, mutating: bool = True):
        async def dependency(
            request: Request,
            authorization: str | None = Header(default=None),
        ) -> UserProfile:
            body = await request.body() if mutating else b""
            token = ""
            if authorization and authorization.lower().startswith("bearer "):
                token = authorization[7:].strip()
            user = platform.user_for_token(token) if token else None
            if user is None:
                platform.authorize_or_audit(None, action, body)
                raise HTTPException(status_code=401, detail="missing or unknown bearer token")
            if not platform.authorize_or_audit(user, action, body):
                raise HTTPException(status_code=403, detail=f"role {user.role} may not {action}")
            if mutating:
                platform.guarded(user, action, body)
            return user

        return dependency

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/ingest/series")
    def ingest_series(body: IngestSeriesBody, user: UserProfile = Depends(guard("train"))):
        try:
            return {"series": platform.ingest_series_csv(body.csv, actor=user.user_id)}
        except StardomError as exc:
            raise _http_error(exc)

    @app.post("/ingest/graph")
    def ingest_graph(body: IngestGraphBody, user: UserProfile = Depends(guard("train"))):
        try:
            return platform.ingest_graph_csv(body.csv, body.mapping)
        except StardomError as exc:
            raise _http_error(exc)

    @app.post("/train")
    def train(body: TrainBody, user: UserProfile = Depends(guard("train"))):
        try:
            job = platform.train(
                body.series_id, body.model_key, body.folds, tuple(body.scenario_ids)
            )
        except StardomError as exc:
            raise _http_error(exc)
        return job.to_payload()

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str, user: UserProfile = Depends(guard("read_forecast", mutating=False))):
        job = platform.jobs.get(job_id)
        if job is None:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id}")
        return job.to_payload()

    @app.post("/forecast")
    def forecast(body: ForecastBody, user: UserProfile = Depends(guard("read_forecast"))):
        try:
            fc = platform.forecast(body.series_id, body.model_key, body.as_of, body.horizon)
        except StardomError as exc:
            raise _http_error(exc)
        return fc.to_payload()

    @app.get("/forecasts/{forecast_id}")
    def get_forecast(
        forecast_id: str,
        user: UserProfile = Depends(guard("read_forecast", mutating=False)),
    ):
        try:
            return platform.get_forecast(forecast_id).to_payload()
        except UsageError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.post("/explain")
    def explain(body: ExplainBody, user: UserProfile = Depends(guard("read_explanation"))):
        try:
            ex = platform.explain(body.forecast_id, user, seed=body.seed, sigma=body.sigma)
        except StardomError as exc:
            raise _http_error(exc)
        return ex.to_payload()

    @app.get("/explanations/{explanation_id}")
    def get_explanation(
        explanation_id: str,
        user: UserProfile = Depends(guard("read_explanation", mutating=False)),
    ):
        try:
            return platform.get_explanation(explanation_id).to_payload()
        except UsageError as exc:
            raise HTTPException(status_code=404, detail=str(exc))

    @app.get("/al/queue")
    def al_queue(
        series_id: str | None = None,
        user: UserProfile = Depends(guard("label", mutating=False)),
    ):
        return {"items": platform.queue_payload(series_id)}

    @app.post("/al/label")
    def al_label(body: LabelBody, user: UserProfile = Depends(guard("label"))):
        try:
            item = platform.al_label(body.item_id, body.value, user)
        except StardomError as exc:
            raise _http_error(exc)
        job = platform.last_retrain_job
        return {
            "item_id": item.item_id,
            "status": item.status,
            "label": item.label,
            "retrain_job_id": job.job_id if job else None,
        }

    @app.post("/scenarios/generate")
    def scenarios_generate(body: ScenarioBody, user: UserProfile = Depends(guard("train"))):
        try:
            spec = sim.PerturbationSpec(
                kind=body.kind, magnitude=body.magnitude,
                window_start=body.window_start, window_len=body.window_len, seed=body.seed,
            )
            scenario = platform.generate_scenario(body.series_id, spec, body.forecast_id)
        except StardomError as exc:
            raise _http_error(exc)
        return scenario.to_payload()

    @app.post("/scenarios/{scenario_id}/assess")
    def scenarios_assess(scenario_id: str, user: UserProfile = Depends(guard("train"))):
        try:
            scenario = platform.assess_scenario(scenario_id)
        except StardomError as exc:
            raise _http_error(exc)
        return scenario.to_payload()

    @app.post("/recommend")
    def recommend(body: RecommendBody, user: UserProfile = Depends(guard("read_forecast"))):
        try:
            options = platform.recommend_options(body.model_dump())
        except StardomError as exc:
            raise _http_error(exc)
        return {"options": options}

    @app.post("/feedback")
    def feedback(body: FeedbackBody, user: UserProfile = Depends(guard("submit_feedback"))):
        try:
            event = platform.record_feedback(user, body.model_dump())
        except StardomError as exc:
            raise _http_error(exc)
        return event.to_payload()

    @app.get("/audit/verify")
    def audit_verify(user: UserProfile = Depends(guard("admin_config", mutating=False))):
        return platform.audit_verify()

    @app.get("/graph/query")
    def graph_query(
        subject: str | None = None,
        predicate: str | None = None,
        object: str | None = None,
        user: UserProfile = Depends(guard("read_summary", mutating=False)),
    ):
        try:
            return {"triples": platform.graph_query(subject, predicate, object)}
        except StardomError as exc:
            raise _http_error(exc)

    return app


def serve(platform: Platform):
    """Run the API with uvicorn on the configured bind address."""
    import uvicorn

    app = create_app(platform)
    uvicorn.run(app, host=platform.config.host, port=platform.config.port, log_level="info")
