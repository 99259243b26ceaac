"""HTTP/JSON API over the game engine with durable per-session logs.

Every state-mutating call appends its events (fsynced) before the response
goes out; a snapshot plus the log tail rebuilds any session after a crash.
One process can also serve the built web client from a static directory.
"""

from __future__ import annotations

import json
import os
import threading
from typing import Callable, Optional, Sequence

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response

from .engine import (
    AWAITING_DIET,
    COMPLETED,
    PROBES,
    BudgetError,
    EngineError,
    EventLogWriter,
    PhaseError,
    ReplayError,
    ReplayFold,
    Session,
    SessionConfig,
    ValidationError,
    config_from_dict,
    counterfactual_to_dict,
    guidance_to_dict,
    model_hash,
    new_session_id,
    read_events_jsonl,
    record_to_dict,
    state_from_dict,
    state_to_dict,
    world_to_dict,
)
from .explainer import (
    ConstraintError,
    Counterfactual,
    constraints_from_dict,
)
from .metrics import MetricsError
from .predictor import PredictorError, TrainedModel, stats_for_model
from .rng import MASK64
from .world import WorldError

CODE_STATUS = {
    "VALIDATION": 422,
    "BUDGET_EXCEEDED": 409,
    "WRONG_PHASE": 409,
    "NOT_FOUND": 404,
    "INTERNAL": 500,
}

DEFAULT_QUESTIONNAIRE_ITEMS = [
    "The explanations helped me understand how the predictor judges diets.",
    "The explanations were satisfying.",
    "The explanations had enough detail.",
    "The explanations showed me how to reach a better diet.",
    "The explanations were trustworthy.",
    "The suggested diets were realistic to follow within the time budget.",
    "The hints about typical healthy diets were useful.",
    "I would rely on explanations like these in future rounds.",
]


class ApiError(Exception):
    def __init__(self, code: str, message: str, detail: Optional[dict] = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.detail = detail

    def to_response(self) -> JSONResponse:
        body = {"error": {"code": self.code, "message": self.message}}
        if self.detail is not None:
            body["error"]["detail"] = self.detail
        return JSONResponse(status_code=CODE_STATUS[self.code], content=body)


def _to_api_error(exc: Exception) -> ApiError:
    if isinstance(exc, ApiError):
        return exc
    if isinstance(exc, BudgetError):
        return ApiError("BUDGET_EXCEEDED", str(exc))
    if isinstance(exc, PhaseError):
        return ApiError("WRONG_PHASE", str(exc))
    if isinstance(
        exc,
        (ValidationError, WorldError, ConstraintError, MetricsError, PredictorError),
    ):
        return ApiError("VALIDATION", str(exc))
    if isinstance(exc, (ReplayError, EngineError)):
        return ApiError("INTERNAL", str(exc))
    return ApiError("INTERNAL", f"unexpected error: {exc}")


class SessionRuntime:
    """One live session plus its durable writer and retry cache."""

    def __init__(self, session: Session, writer: EventLogWriter, snapshot_path: str):
        self.session = session
        self.writer = writer
        self.snapshot_path = snapshot_path
        self.lock = threading.Lock()
        self.commands_since_snapshot = 0
        self.last_round_request: Optional[dict] = None
        self.last_round_response: Optional[dict] = None


def create_app(
    model: TrainedModel,
    data_dir: str,
    static_dir: Optional[str] = None,
    stats: Optional[list] = None,
    clock: Optional[Callable[[], int]] = None,
    cors_origins: Sequence[str] = ("*",),
    questionnaire_items: Optional[Sequence[str]] = None,
    snapshot_every: int = 5,
) -> FastAPI:
    os.makedirs(data_dir, exist_ok=True)
    if stats is None:
        stats = stats_for_model(model)
    items_text = list(questionnaire_items or DEFAULT_QUESTIONNAIRE_ITEMS)
    if len(items_text) != 8:
        raise ValueError("questionnaire_items must have exactly 8 entries")
    mhash = model_hash(model)
    world = model.world

    app = FastAPI(title="clxai", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    registry: dict[str, SessionRuntime] = {}
    registry_lock = threading.Lock()

    def log_path(session_id: str) -> str:
        return os.path.join(data_dir, f"{session_id}.jsonl")

    def snapshot_path(session_id: str) -> str:
        return os.path.join(data_dir, f"{session_id}.snapshot.json")

    def session_kwargs() -> dict:
        kw: dict = {"stats": stats}
        if clock is not None:
            kw["clock"] = clock
        return kw

    def write_snapshot(runtime: SessionRuntime) -> None:
        doc = {
            "last_seq": runtime.session.last_seq,
            "state": state_to_dict(runtime.session.state),
        }
        tmp = runtime.snapshot_path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, runtime.snapshot_path)
        runtime.commands_since_snapshot = 0

    def after_command(runtime: SessionRuntime) -> None:
        runtime.commands_since_snapshot += 1
        if runtime.commands_since_snapshot >= snapshot_every:
            write_snapshot(runtime)

    def recover_session(session_id: str) -> SessionRuntime:
        path = log_path(session_id)
        if not os.path.exists(path):
            raise ApiError("NOT_FOUND", f"no session {session_id!r}")
        events = read_events_jsonl(path)
        snap = snapshot_path(session_id)
        state = None
        last_seq = 0
        if os.path.exists(snap):
            with open(snap, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
            state = state_from_dict(doc["state"])
            last_seq = doc["last_seq"]
        fold = ReplayFold(state, last_seq)
        for e in events:
            if e.seq > last_seq:
                fold.apply(e)
        if fold.state is None:
            raise ApiError("INTERNAL", f"session {session_id!r} log holds no events")
        writer = EventLogWriter(path)
        session = Session.resume(
            fold.state, fold.last_seq, model, sink=writer.append, **session_kwargs()
        )
        return SessionRuntime(session, writer, snap)

    def get_runtime(session_id: str) -> SessionRuntime:
        with registry_lock:
            runtime = registry.get(session_id)
            if runtime is None:
                runtime = recover_session(session_id)
                registry[session_id] = runtime
            return runtime

    def session_view(session: Session) -> dict:
        state = session.state
        cfg = state.config
        return {
            "session_id": cfg.session_id,
            "phase": state.phase,
            "round_number": state.round_number,
            "total_rounds": cfg.total_rounds,
            "explanation_interval": cfg.explanation_interval,
            "fitness": state.fitness,
            "optimal_threshold": cfg.optimal_threshold,
            "unsatisfactory_threshold": cfg.unsatisfactory_threshold,
            "budget": cfg.world.round_budget,
            "current_diet": list(state.current_diet),
            "plants": world_to_dict(cfg.world)["plants"],
            "history": [record_to_dict(r) for r in state.history],
            "pending_explanations": [
                counterfactual_to_dict(cf) for cf in state.pending_explanations
            ],
            "questionnaire_items": items_text,
            "n_probes": 6,
        }

    async def read_body(request: Request) -> dict:
        raw = await request.body()
        if not raw:
            return {}
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ApiError("VALIDATION", f"request body is not valid JSON: {exc}")
        if not isinstance(doc, dict):
            raise ApiError("VALIDATION", "request body must be a JSON object")
        return doc

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return exc.to_response()

    @app.exception_handler(Exception)
    async def handle_any(request: Request, exc: Exception):
        return _to_api_error(exc).to_response()

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "model_hash": mhash}

    @app.post("/api/v1/sessions", status_code=201)
    async def create_session(request: Request):
        doc = await read_body(request)
        session_id = doc.get("session_id") or new_session_id()
        with registry_lock:
            if session_id in registry or os.path.exists(log_path(session_id)):
                raise ApiError("VALIDATION", f"session {session_id!r} already exists")
            if "seed" in doc:
                seed = doc["seed"]
                if not isinstance(seed, int) or isinstance(seed, bool):
                    raise ApiError("VALIDATION", "seed must be an integer")
            else:
                seed = int.from_bytes(os.urandom(8), "big") & MASK64
            overrides = {
                k: doc[k]
                for k in (
                    "total_rounds",
                    "explanation_interval",
                    "fitness_start",
                    "fitness_gain",
                    "fitness_loss",
                    "optimal_threshold",
                    "unsatisfactory_threshold",
                )
                if k in doc
            }
            try:
                config = config_from_dict(
                    {
                        "session_id": session_id,
                        "world": world_to_dict(world),
                        "model_ref": mhash,
                        "seed": seed,
                        **overrides,
                    }
                )
            except EngineError as exc:
                raise _to_api_error(exc)
            writer = EventLogWriter(log_path(session_id))
            try:
                session = Session(
                    config, model, sink=writer.append, **session_kwargs()
                )
            except Exception as exc:
                writer.close()
                os.unlink(log_path(session_id))
                raise _to_api_error(exc)
            runtime = SessionRuntime(session, writer, snapshot_path(session_id))
            registry[session_id] = runtime
            after_command(runtime)
        return {"session_id": session_id, "state": session_view(session)}

    @app.get("/api/v1/sessions/{session_id}")
    def get_session(session_id: str):
        runtime = get_runtime(session_id)
        with runtime.lock:
            return {"state": session_view(runtime.session)}

    @app.post("/api/v1/sessions/{session_id}/rounds")
    async def submit_round(session_id: str, request: Request):
        doc = await read_body(request)
        runtime = get_runtime(session_id)
        with runtime.lock:
            session = runtime.session
            if "diet" not in doc or "decision_ms" not in doc:
                raise ApiError("VALIDATION", "body needs diet and decision_ms")
            if not isinstance(doc["diet"], list):
                raise ApiError("VALIDATION", "diet must be a list of leaf counts")
            normalized = {
                "diet": doc["diet"],
                "decision_ms": doc["decision_ms"],
                "feedback": doc.get("feedback"),
            }
            if session.state.phase != AWAITING_DIET:
                # a retry of the already-applied round replays the old response
                if (
                    runtime.last_round_request is not None
                    and normalized == runtime.last_round_request
                ):
                    return runtime.last_round_response
                raise ApiError(
                    "WRONG_PHASE",
                    f"cannot submit a round in phase {session.state.phase}",
                )
            feedback = None
            if doc.get("feedback") is not None:
                try:
                    feedback = constraints_from_dict(doc["feedback"], world)
                except ConstraintError as exc:
                    raise _to_api_error(exc)
            try:
                record = session.submit_round(
                    doc["diet"], doc["decision_ms"], feedback
                )
            except (EngineError, WorldError, ConstraintError) as exc:
                raise _to_api_error(exc)
            after_command(runtime)
            response = {
                "round_record": record_to_dict(record),
                "state": session_view(session),
            }
            if record.explanation_shown is not None:
                response["explanation"] = counterfactual_to_dict(
                    record.explanation_shown
                )
            if record.guidance_shown is not None:
                response["guidance"] = guidance_to_dict(record.guidance_shown)
            runtime.last_round_request = normalized
            runtime.last_round_response = response
            return response

    @app.post("/api/v1/sessions/{session_id}/ack")
    def acknowledge(session_id: str):
        runtime = get_runtime(session_id)
        with runtime.lock:
            try:
                runtime.session.acknowledge()
            except EngineError as exc:
                raise _to_api_error(exc)
            after_command(runtime)
            return {"state": session_view(runtime.session)}

    @app.post("/api/v1/sessions/{session_id}/feedback")
    async def whatif(session_id: str, request: Request):
        doc = await read_body(request)
        runtime = get_runtime(session_id)
        with runtime.lock:
            if "constraints" not in doc:
                raise ApiError("VALIDATION", "body needs constraints")
            try:
                constraints = constraints_from_dict(doc["constraints"], world)
                result = runtime.session.whatif(constraints)
            except (EngineError, WorldError, ConstraintError) as exc:
                raise _to_api_error(exc)
            after_command(runtime)
            if isinstance(result, Counterfactual):
                return {"counterfactual": counterfactual_to_dict(result)}
            return {
                "guidance": guidance_to_dict(result.guidance)
                if result.guidance
                else None
            }

    @app.post("/api/v1/sessions/{session_id}/questionnaire")
    async def questionnaire(session_id: str, request: Request):
        doc = await read_body(request)
        runtime = get_runtime(session_id)
        with runtime.lock:
            if "items" not in doc or not isinstance(doc["items"], list):
                raise ApiError("VALIDATION", "body needs items, a list of 8 ratings")
            try:
                satisfaction = runtime.session.submit_questionnaire(
                    doc["items"], doc.get("free_text", "")
                )
            except EngineError as exc:
                raise _to_api_error(exc)
            after_command(runtime)
            return {"satisfaction": satisfaction}

    @app.get("/api/v1/sessions/{session_id}/probes")
    def get_probes(session_id: str):
        runtime = get_runtime(session_id)
        with runtime.lock:
            if runtime.session.state.phase not in (PROBES, COMPLETED):
                raise ApiError(
                    "WRONG_PHASE",
                    "probes are available after the questionnaire",
                )
            return {"probes": [list(d) for d in runtime.session.probe_diets()]}

    @app.post("/api/v1/sessions/{session_id}/probes")
    async def submit_probes(session_id: str, request: Request):
        doc = await read_body(request)
        runtime = get_runtime(session_id)
        with runtime.lock:
            if "answers" not in doc or not isinstance(doc["answers"], list):
                raise ApiError("VALIDATION", "body needs answers, a list of labels")
            try:
                understanding = runtime.session.submit_probes(doc["answers"])
            except EngineError as exc:
                raise _to_api_error(exc)
            after_command(runtime)
            return {"understanding": understanding}

    @app.get("/api/v1/sessions/{session_id}/log")
    def get_log(session_id: str):
        path = log_path(session_id)
        if not os.path.exists(path):
            raise ApiError("NOT_FOUND", f"no session {session_id!r}")
        runtime = get_runtime(session_id)
        with runtime.lock:
            with open(path, "rb") as fh:
                content = fh.read()
        return Response(content=content, media_type="application/x-ndjson")

    if static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app


def load_config_file(path: Optional[str]) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("service config file must hold a JSON object")
    return doc
