"""HTTP session service under ``/api/v1``.

Sessions live in memory with write-through log persistence: the header
line is written when the session is created and every action appends its
record immediately, so a crash after an ended session leaves a complete,
replayable log file on disk. Per-session writes are serialized by a
lock; reads never mutate state.
"""

from __future__ import annotations

import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from . import analytics, engine
from .dsl import ScenarioLibrary
from .engine import (
    ActionInstance,
    ActionKind,
    Outcome,
    SessionConfig,
    SessionState,
)
from .guidance import next_cue
from .model import PARAM_SPECS, Scenario, compute_metrics

DEFAULT_TTL_MINUTES = 60.0


class ServiceError(Exception):
    status = 400
    kind = "bad_request"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class NotFound(ServiceError):
    status = 404
    kind = "not_found"


class SessionEndedError(ServiceError):
    status = 409
    kind = "session_ended"


class NotEnded(ServiceError):
    status = 409
    kind = "not_ended"


class UnknownActionError(ServiceError):
    status = 400
    kind = "unknown_action"


class InvalidParamError(ServiceError):
    status = 400
    kind = "invalid_param"


class StaleStep(ServiceError):
    status = 409
    kind = "stale_step"


class ConfigBody(BaseModel):
    max_mistakes: int = Field(default=4, ge=1)
    timing_enforced: bool = False
    seed: int = Field(default=0, ge=0, lt=2**64)


class CreateSessionBody(BaseModel):
    scenario_id: str
    config: Optional[ConfigBody] = None


class ActionBody(BaseModel):
    kind: str
    param: Optional[str] = None
    # Optimistic concurrency: when set, the action applies only if the
    # session is still at this step; stale submissions get 409.
    expected_step: Optional[int] = None


def _menu_view(state: SessionState) -> list[dict]:
    if state.outcome is not Outcome.ONGOING:
        return []
    stage = state.scenario.stages[state.stage_id]
    view = []
    for kind in stage.menu_kinds():
        spec = PARAM_SPECS.get(kind)
        view.append({
            "kind": kind.value,
            "label": kind.label,
            "parameterized": spec is not None,
            "param_choices": None if spec is None else [
                {"value": v.value, "label": v.label} for v in spec.allowed_values
            ],
        })
    return view


def session_view(state: SessionState, session_id: str) -> dict:
    scenario = state.scenario
    stage = scenario.stages[state.stage_id]
    vitals = engine.current_vitals(state)
    cue = None
    if state.outcome is Outcome.ONGOING:
        found = next_cue(scenario, state)
        if found is not None:
            cue = {"text": found.text,
                   "names_correct_action": found.names_correct_action}
    return {
        "session_id": session_id,
        "scenario_id": scenario.id,
        "scenario_title": scenario.title,
        "outcome": state.outcome.value,
        "stage_id": stage.id,
        "prompt": stage.prompt,
        "vitals": {
            "heart_rate": vitals.heart_rate,
            "breathing": vitals.breathing.value,
            "tone": vitals.tone.value,
            "health": vitals.health,
        },
        "mistakes": state.mistakes,
        "health": state.health,
        "max_mistakes": state.config.max_mistakes,
        "step_index": state.step_index,
        "cue": cue,
        "menu": _menu_view(state),
        "abandoned": state.log.abandoned,
    }


@dataclass
class LiveSession:
    session_id: str
    state: SessionState
    log_path: Path
    last_active: float
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def playable(self) -> bool:
        return (self.state.outcome is Outcome.ONGOING
                and not self.state.log.abandoned)


class SessionRegistry:
    """Holds live sessions; one lock per session, one for the table."""

    def __init__(self, library: ScenarioLibrary, log_dir: Path,
                 ttl_minutes: float = DEFAULT_TTL_MINUTES,
                 clock: Callable[[], float] = time.time):
        self.library = library
        self.log_dir = Path(log_dir)
        self.ttl_seconds = ttl_minutes * 60.0
        self.clock = clock
        self._sessions: dict[str, LiveSession] = {}
        self._table_lock = threading.Lock()

    def _append_line(self, path: Path, line: str) -> None:
        with path.open("a", encoding="utf-8") as fh:
            fh.write(line + "\n")

    def create(self, scenario: Scenario, config: SessionConfig) -> LiveSession:
        self.log_dir.mkdir(parents=True, exist_ok=True)
        with self._table_lock:
            session_id = secrets.token_urlsafe(16)
            while session_id in self._sessions:
                session_id = secrets.token_urlsafe(16)
            state = engine.start_session(scenario, config, validate=False,
                                         session_id=session_id)
            live = LiveSession(
                session_id=session_id,
                state=state,
                log_path=self.log_dir / f"{session_id}.jsonl",
                last_active=self.clock(),
            )
            self._sessions[session_id] = live
        self._append_line(live.log_path, analytics.render_header_line(state.log))
        return live

    def get(self, session_id: str) -> LiveSession:
        self.sweep_expired()
        with self._table_lock:
            live = self._sessions.get(session_id)
        if live is None:
            raise NotFound(f"no session {session_id!r}")
        return live

    def sweep_expired(self) -> int:
        """Abandon sessions idle past the TTL; they stay readable."""
        now = self.clock()
        swept = 0
        with self._table_lock:
            candidates = list(self._sessions.values())
        for live in candidates:
            with live.lock:
                if live.playable and now - live.last_active > self.ttl_seconds:
                    engine.mark_abandoned(live.state)
                    self._append_line(live.log_path,
                                      analytics.render_abandon_line(live.state.log))
                    swept += 1
        return swept

    def submit(self, session_id: str, action: ActionInstance,
               expected_step: Optional[int]) -> tuple[LiveSession, engine.FeedbackEvent]:
        live = self.get(session_id)
        with live.lock:
            if not live.playable:
                raise SessionEndedError(
                    f"session outcome is "
                    f"{'abandoned' if live.state.log.abandoned else live.state.outcome.value}")
            if expected_step is not None and expected_step != live.state.step_index:
                raise StaleStep(
                    f"session is at step {live.state.step_index}, "
                    f"not {expected_step}")
            try:
                state, event = engine.apply_action(live.state, action)
            except engine.UnknownAction as exc:
                raise UnknownActionError(str(exc)) from exc
            except engine.SessionEnded as exc:
                raise SessionEndedError(str(exc)) from exc
            live.last_active = self.clock()
            self._append_line(live.log_path,
                              analytics.render_record_line(state.log.records[-1]))
        return live, event


def create_app(library: ScenarioLibrary, log_dir, ttl_minutes: float =
               DEFAULT_TTL_MINUTES, clock: Callable[[], float] = time.time,
               ui_dir=None) -> FastAPI:
    app = FastAPI(title="neodrill session service", version="1")
    registry = SessionRegistry(library, Path(log_dir), ttl_minutes, clock)
    app.state.registry = registry

    @app.exception_handler(ServiceError)
    async def _service_error(_request: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"kind": exc.kind, "message": exc.message}},
        )

    @app.get("/api/v1/scenarios")
    def list_scenarios() -> list[dict]:
        rows = []
        for sc in registry.library.scenarios:
            metrics = sc.declared_metrics or compute_metrics(sc)
            rows.append({
                "id": sc.id,
                "title": sc.title,
                "tier": sc.difficulty_tier,
                "metrics": {
                    "optimal_path_length": metrics.optimal_path_length,
                    "distinct_actions": metrics.distinct_actions,
                },
            })
        return rows

    @app.post("/api/v1/sessions", status_code=201)
    def create_session(body: CreateSessionBody) -> dict:
        scenario = registry.library.by_id(body.scenario_id)
        if scenario is None:
            raise NotFound(f"no scenario {body.scenario_id!r}")
        cfg = body.config or ConfigBody()
        config = SessionConfig(max_mistakes=cfg.max_mistakes,
                               timing_enforced=cfg.timing_enforced,
                               seed=cfg.seed)
        live = registry.create(scenario, config)
        return {"session_id": live.session_id,
                "view": session_view(live.state, live.session_id)}

    @app.get("/api/v1/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        live = registry.get(session_id)
        return session_view(live.state, live.session_id)

    @app.post("/api/v1/sessions/{session_id}/actions")
    def submit_action(session_id: str, body: ActionBody) -> dict:
        try:
            kind = ActionKind(body.kind)
        except ValueError:
            raise UnknownActionError(f"unknown action kind {body.kind!r}") from None
        try:
            action = ActionInstance(kind, body.param)
        except ValueError as exc:
            raise InvalidParamError(str(exc)) from None
        live, event = registry.submit(session_id, action, body.expected_step)
        return {
            "feedback": {
                "kind": event.kind.value,
                "utterance": event.utterance,
                "audio_cue": event.audio_cue,
            },
            "view": session_view(live.state, live.session_id),
        }

    @app.get("/api/v1/sessions/{session_id}/log")
    def get_log(session_id: str) -> PlainTextResponse:
        live = registry.get(session_id)
        with live.lock:
            content = analytics.render_log(live.state.log)
        return PlainTextResponse(content, media_type="application/x-ndjson")

    @app.get("/api/v1/sessions/{session_id}/debrief")
    def get_debrief(session_id: str) -> dict:
        live = registry.get(session_id)
        with live.lock:
            if live.state.outcome is Outcome.ONGOING and not live.state.log.abandoned:
                raise NotEnded("session is still ongoing")
            report = analytics.debrief_report(live.state.log, live.state.scenario)
        return report.to_dict()

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
