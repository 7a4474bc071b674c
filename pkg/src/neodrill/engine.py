"""Deterministic session state machine.

A session owns one play-through of a scenario: it tracks the current
stage, the mistake count, the infant health bar and an append-only log
from which the whole run can be replayed bit-for-bit (wall-clock
timestamps excluded).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Optional

from . import guidance
from .model import (
    MAX_HEALTH,
    TERMINAL_SAVE,
    ActionInstance,
    ActionKind,
    InfantVitals,
    MenuEntry,
    Scenario,
    effective_vitals,
    is_correct_choice,
    next_stage_target,
    validate_scenario,
)

LOG_FORMAT_VERSION = 1

#: Algorithm identifier of the seedable generator used for simulations,
#: recorded in every log header so runs stay reproducible.
RNG_ALGORITHM = "mt19937"

TOO_SLOW_UTTERANCE = "Too slow. The moment has passed."
SAVE_UTTERANCE = "The baby is pinking up and breathing. Well done."
DEATH_UTTERANCE = "We lost the baby."


class EngineError(Exception):
    pass


class InvalidScenario(EngineError):
    def __init__(self, report):
        super().__init__(report.summary())
        self.report = report


class SessionEnded(EngineError):
    pass


class UnknownAction(EngineError):
    pass


class ReplayDivergence(EngineError):
    """A recorded action is illegal or inconsistent at replay time."""

    def __init__(self, step_index: int, message: str):
        super().__init__(f"step {step_index}: {message}")
        self.step_index = step_index


class Outcome(str, Enum):
    ONGOING = "ongoing"
    SAVED = "saved"
    DIED = "died"


class FeedbackKind(str, Enum):
    CORRECT = "correct"
    MISTAKE_WRONG_ACTION = "mistake_wrong_action"
    MISTAKE_WRONG_PARAM = "mistake_wrong_param"
    DEATH = "death"
    SAVE = "save"

    @property
    def is_mistake(self) -> bool:
        return self in (
            FeedbackKind.MISTAKE_WRONG_ACTION,
            FeedbackKind.MISTAKE_WRONG_PARAM,
            FeedbackKind.DEATH,
        )


@dataclass(frozen=True)
class FeedbackEvent:
    kind: FeedbackKind
    utterance: Optional[str] = None
    audio_cue: bool = False

    def __post_init__(self) -> None:
        if self.audio_cue != self.kind.is_mistake:
            raise ValueError("audio_cue must accompany mistakes and death only")


@dataclass(frozen=True)
class SessionConfig:
    max_mistakes: int = 4
    timing_enforced: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_mistakes < 1:
            raise ValueError("max_mistakes must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


def health_level(mistakes: int, max_mistakes: int) -> int:
    """Remaining margin mapped onto the 4-segment health bar.

    With the default max_mistakes of 4 this is exactly
    ``max(0, 4 - mistakes)``; other budgets scale so that any remaining
    margin still shows at least one segment.
    """
    remaining = max(0, max_mistakes - mistakes)
    return (MAX_HEALTH * remaining + max_mistakes - 1) // max_mistakes


@dataclass(frozen=True)
class LogRecord:
    step_index: int
    t: int  # logical time after the action; advances 1 per action
    stage_id: str
    kind: ActionKind
    param: Optional[str]
    feedback: FeedbackKind
    mistakes_after: int
    health_after: int


@dataclass
class LogHeader:
    scenario_id: str
    config: SessionConfig
    rng: str = RNG_ALGORITHM
    format_version: int = LOG_FORMAT_VERSION
    started_at: str = field(default="", compare=False)
    session_id: Optional[str] = field(default=None, compare=False)


@dataclass
class SessionLog:
    header: LogHeader
    records: list[LogRecord] = field(default_factory=list)
    abandoned: bool = False
    abandoned_at: Optional[str] = field(default=None, compare=False)


@dataclass
class SessionState:
    scenario: Scenario
    config: SessionConfig
    stage_id: str
    mistakes: int
    health: int
    step_index: int
    outcome: Outcome
    log: SessionLog
    draws_at_stage: int = 0

    @property
    def scenario_id(self) -> str:
        return self.scenario.id


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def start_session(scenario: Scenario, config: Optional[SessionConfig] = None,
                  *, validate: bool = True,
                  session_id: Optional[str] = None) -> SessionState:
    """Open a fresh session at the scenario's initial stage."""
    config = config or SessionConfig()
    if validate:
        report = validate_scenario(scenario)
        if not report.ok:
            raise InvalidScenario(report)
    header = LogHeader(
        scenario_id=scenario.id,
        config=config,
        started_at=_utc_now(),
        session_id=session_id,
    )
    return SessionState(
        scenario=scenario,
        config=config,
        stage_id=scenario.initial_stage,
        mistakes=0,
        health=health_level(0, config.max_mistakes),
        step_index=0,
        outcome=Outcome.ONGOING,
        log=SessionLog(header=header),
    )


def legal_actions(state: SessionState) -> list[MenuEntry]:
    """The current stage's authored menu, in authored order."""
    if state.outcome is not Outcome.ONGOING:
        raise SessionEnded(f"session outcome is {state.outcome.value}")
    return list(state.scenario.stages[state.stage_id].menu)


def _matching_entry(stage, action: ActionInstance) -> MenuEntry:
    """Entry whose pattern best matches the action, for utterance lookup."""
    candidates = [e for e in stage.menu if e.kind is action.kind]
    for e in candidates:
        if e.param == action.param:
            return e
    for e in candidates:
        if e.param is None:
            return e
    return candidates[0]


def apply_action(state: SessionState,
                 action: ActionInstance) -> tuple[SessionState, FeedbackEvent]:
    """Judge one menu choice and advance the session.

    Exactly one log record is appended per call. The state object is
    updated in place and returned alongside the feedback event.
    """
    if state.outcome is not Outcome.ONGOING:
        raise SessionEnded(f"session outcome is {state.outcome.value}")
    scenario = state.scenario
    stage = scenario.stages[state.stage_id]
    if action.kind not in (e.kind for e in stage.menu):
        raise UnknownAction(
            f"{action.kind.value} is not on the menu at stage {stage.id!r}")

    too_slow = (
        state.config.timing_enforced
        and stage.time_budget is not None
        and state.draws_at_stage >= stage.time_budget
    )
    correct = not too_slow and is_correct_choice(stage, action)

    if correct:
        target = next_stage_target(
            stage, effective_vitals(stage.vitals, state.health))
        if target is None:
            raise EngineError(f"no transition satisfied at stage {stage.id!r}")
        if target == TERMINAL_SAVE:
            state.outcome = Outcome.SAVED
            event = FeedbackEvent(FeedbackKind.SAVE, utterance=SAVE_UTTERANCE)
        else:
            state.stage_id = target
            state.draws_at_stage = 0
            event = FeedbackEvent(FeedbackKind.CORRECT)
    else:
        state.mistakes += 1
        state.health = health_level(state.mistakes, state.config.max_mistakes)
        state.draws_at_stage += 1
        if too_slow:
            utterance = TOO_SLOW_UTTERANCE
            mistake_kind = FeedbackKind.MISTAKE_WRONG_ACTION
        else:
            entry = _matching_entry(stage, action)
            utterance = guidance.mistake_utterance(scenario, state, entry)
            wrong_param = any(
                e.correct and e.kind is action.kind for e in stage.menu)
            mistake_kind = (FeedbackKind.MISTAKE_WRONG_PARAM if wrong_param
                            else FeedbackKind.MISTAKE_WRONG_ACTION)
        if state.mistakes >= state.config.max_mistakes:
            state.outcome = Outcome.DIED
            event = FeedbackEvent(FeedbackKind.DEATH, utterance=DEATH_UTTERANCE,
                                  audio_cue=True)
        else:
            event = FeedbackEvent(mistake_kind, utterance=utterance,
                                  audio_cue=True)

    state.log.records.append(LogRecord(
        step_index=state.step_index,
        t=state.step_index + 1,
        stage_id=stage.id,
        kind=action.kind,
        param=action.param,
        feedback=event.kind,
        mistakes_after=state.mistakes,
        health_after=state.health,
    ))
    state.step_index += 1
    return state, event


def current_vitals(state: SessionState) -> InfantVitals:
    """The presented vitals: authored stage vitals with session health.

    After death the bar reads zero; after a save it keeps the level the
    session ended with.
    """
    stage = state.scenario.stages[state.stage_id]
    health = 0 if state.outcome is Outcome.DIED else state.health
    return effective_vitals(stage.vitals, health)


def mark_abandoned(state: SessionState) -> None:
    """Flag the log of a walked-away session; no further actions apply."""
    if not state.log.abandoned:
        state.log.abandoned = True
        state.log.abandoned_at = _utc_now()


def replay(scenario: Scenario, log: SessionLog) -> SessionState:
    """Re-apply every recorded action and return the reconstructed state.

    Raises ReplayDivergence when a recorded action is illegal or its
    re-applied outcome differs from the recorded one (log corruption or
    scenario drift).
    """
    state = start_session(scenario, log.header.config, validate=False)
    for i, rec in enumerate(log.records):
        if state.outcome is not Outcome.ONGOING:
            raise ReplayDivergence(rec.step_index, "action after session end")
        if rec.stage_id != state.stage_id:
            raise ReplayDivergence(
                rec.step_index,
                f"log is at stage {rec.stage_id!r} but replay is at "
                f"{state.stage_id!r}")
        try:
            action = ActionInstance(rec.kind, rec.param)
        except ValueError as exc:
            raise ReplayDivergence(rec.step_index, str(exc)) from exc
        try:
            state, _ = apply_action(state, action)
        except EngineError as exc:
            raise ReplayDivergence(rec.step_index, str(exc)) from exc
        produced = state.log.records[i]
        if produced != rec:
            raise ReplayDivergence(
                rec.step_index,
                f"recorded {rec} but replay produced {produced}")
    if log.abandoned:
        state.log.abandoned = True
        state.log.abandoned_at = log.abandoned_at
    return state
