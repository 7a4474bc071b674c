"""Session logs on disk, debrief reports and difficulty estimation.

The log file is JSON Lines: line 0 is the session-started header, then
one record per action, then an optional abandonment trailer. Header
timestamps and session ids are excluded from equality so replays and
cross-client runs compare byte-for-byte on the record lines.

Difficulty of a scenario is measured as the survival probability of a
trainee picking uniformly at random from each menu: once exactly, by
enumerating the whole outcome tree, and once empirically, by seeded
Monte-Carlo sampling. The two routes check each other.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .engine import (
    LOG_FORMAT_VERSION,
    RNG_ALGORITHM,
    ActionKind,
    FeedbackKind,
    LogHeader,
    LogRecord,
    Outcome,
    SessionConfig,
    SessionLog,
    health_level,
    replay,
)
from .guidance import next_cue
from .model import (
    TERMINAL_SAVE,
    GuidanceMode,
    Scenario,
    Stage,
    effective_vitals,
    expand_choices,
    is_correct_choice,
    next_stage_target,
)

DEFAULT_NODE_BUDGET = 10_000_000


class AnalyticsError(Exception):
    pass


class BudgetExceeded(AnalyticsError):
    """Outcome-tree enumeration grew past the node budget."""


class LogFormatError(AnalyticsError):
    pass


# --- log (de)serialization ---------------------------------------------------


def _header_dict(header: LogHeader) -> dict:
    return {
        "event": "session_started",
        "format_version": header.format_version,
        "scenario_id": header.scenario_id,
        "session_id": header.session_id,
        "max_mistakes": header.config.max_mistakes,
        "timing_enforced": header.config.timing_enforced,
        "seed": header.config.seed,
        "rng": header.rng,
        "started_at": header.started_at,
    }


def _record_dict(rec: LogRecord) -> dict:
    return {
        "event": "action",
        "step_index": rec.step_index,
        "t": rec.t,
        "stage_id": rec.stage_id,
        "kind": rec.kind.value,
        "param": rec.param,
        "feedback": rec.feedback.value,
        "mistakes_after": rec.mistakes_after,
        "health_after": rec.health_after,
    }


def render_header_line(log: SessionLog) -> str:
    return json.dumps(_header_dict(log.header), separators=(",", ":"))


def render_record_line(rec: LogRecord) -> str:
    return json.dumps(_record_dict(rec), separators=(",", ":"))


def render_abandon_line(log: SessionLog) -> str:
    return json.dumps(
        {"event": "session_abandoned", "abandoned_at": log.abandoned_at},
        separators=(",", ":"))


def log_to_lines(log: SessionLog) -> list[str]:
    lines = [render_header_line(log)]
    lines += [render_record_line(r) for r in log.records]
    if log.abandoned:
        lines.append(render_abandon_line(log))
    return lines


def render_log(log: SessionLog) -> str:
    return "\n".join(log_to_lines(log)) + "\n"


def write_log(log: SessionLog, path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(render_log(log), encoding="utf-8")
    return p


def parse_log(text: str) -> SessionLog:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise LogFormatError("log is empty")
    try:
        head = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise LogFormatError(f"line 1: {exc}") from exc
    if head.get("event") != "session_started":
        raise LogFormatError("line 1 is not a session_started header")
    try:
        header = LogHeader(
            scenario_id=head["scenario_id"],
            config=SessionConfig(
                max_mistakes=head["max_mistakes"],
                timing_enforced=head["timing_enforced"],
                seed=head["seed"],
            ),
            rng=head.get("rng", RNG_ALGORITHM),
            format_version=head.get("format_version", LOG_FORMAT_VERSION),
            started_at=head.get("started_at", ""),
            session_id=head.get("session_id"),
        )
    except (KeyError, ValueError) as exc:
        raise LogFormatError(f"bad header: {exc}") from exc
    log = SessionLog(header=header)
    for lineno, raw in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise LogFormatError(f"line {lineno}: {exc}") from exc
        event = obj.get("event")
        if event == "session_abandoned":
            log.abandoned = True
            log.abandoned_at = obj.get("abandoned_at")
            continue
        if event != "action":
            raise LogFormatError(f"line {lineno}: unknown event {event!r}")
        try:
            log.records.append(LogRecord(
                step_index=obj["step_index"],
                t=obj["t"],
                stage_id=obj["stage_id"],
                kind=ActionKind(obj["kind"]),
                param=obj["param"],
                feedback=FeedbackKind(obj["feedback"]),
                mistakes_after=obj["mistakes_after"],
                health_after=obj["health_after"],
            ))
        except (KeyError, ValueError) as exc:
            raise LogFormatError(f"line {lineno}: bad record: {exc}") from exc
    return log


def read_log(path) -> SessionLog:
    return parse_log(Path(path).read_text(encoding="utf-8"))


# --- debrief -----------------------------------------------------------------


@dataclass(frozen=True)
class StageRow:
    stage_id: str
    attempts: int
    mistakes: int
    cues_shown: int


@dataclass(frozen=True)
class MistakeDetail:
    step_index: int
    stage_id: str
    chosen: str
    correct: str
    utterance_kind: FeedbackKind


@dataclass
class DebriefReport:
    scenario_id: str
    outcome: str  # saved | died | abandoned | ongoing
    total_mistakes: int
    stage_rows: list[StageRow]
    mistakes_detail: list[MistakeDetail]
    stages_visited: int
    stages_total: int

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "outcome": self.outcome,
            "total_mistakes": self.total_mistakes,
            "stages": [
                {"stage_id": r.stage_id, "attempts": r.attempts,
                 "mistakes": r.mistakes, "cues_shown": r.cues_shown}
                for r in self.stage_rows
            ],
            "mistakes": [
                {"step_index": m.step_index, "stage_id": m.stage_id,
                 "chosen": m.chosen, "correct": m.correct,
                 "feedback": m.utterance_kind.value}
                for m in self.mistakes_detail
            ],
            "coverage": {"visited": self.stages_visited,
                         "total": self.stages_total},
        }

    def render_text(self) -> str:
        lines = [
            f"Scenario: {self.scenario_id}",
            f"Outcome:  {self.outcome.upper()}",
            f"Mistakes: {self.total_mistakes}",
            f"Coverage: {self.stages_visited} of {self.stages_total} stages visited",
            "",
            f"{'stage':<24}{'attempts':>9}{'mistakes':>9}{'cues':>6}",
        ]
        for r in self.stage_rows:
            lines.append(f"{r.stage_id:<24}{r.attempts:>9}{r.mistakes:>9}"
                         f"{r.cues_shown:>6}")
        if self.mistakes_detail:
            lines.append("")
            lines.append("Decisions to review:")
            for m in self.mistakes_detail:
                lines.append(f"  step {m.step_index} at {m.stage_id}: "
                             f"chose {m.chosen}; correct was {m.correct}")
        return "\n".join(lines) + "\n"


def _describe_choice(kind: ActionKind, param: Optional[str]) -> str:
    return kind.label if param is None else f"{kind.label} ({param})"


def _correct_description(stage: Stage) -> str:
    entries = stage.correct_entries()
    if not entries:
        return "(no correct entry authored)"
    return " or ".join(_describe_choice(e.kind, e.param) for e in entries)


def _cue_available(scenario: Scenario, stage: Stage) -> bool:
    if scenario.guidance_mode is GuidanceMode.COMPLETE:
        return True
    return stage.guidance_cue is not None


def debrief_report(log: SessionLog, scenario: Scenario) -> DebriefReport:
    """Summarize a session log for the instructor.

    The log is replayed first; a log that does not replay cleanly
    against this scenario raises ReplayDivergence.
    """
    replay(scenario, log)

    visited: list[str] = [scenario.initial_stage]
    attempts: dict[str, int] = {}
    mistakes: dict[str, int] = {}
    detail: list[MistakeDetail] = []
    for rec in log.records:
        if rec.stage_id != visited[-1]:
            visited.append(rec.stage_id)
        attempts[rec.stage_id] = attempts.get(rec.stage_id, 0) + 1
        if rec.feedback.is_mistake:
            mistakes[rec.stage_id] = mistakes.get(rec.stage_id, 0) + 1
            stage = scenario.stages[rec.stage_id]
            detail.append(MistakeDetail(
                step_index=rec.step_index,
                stage_id=rec.stage_id,
                chosen=_describe_choice(rec.kind, rec.param),
                correct=_correct_description(stage),
                utterance_kind=rec.feedback,
            ))

    rows = [
        StageRow(
            stage_id=sid,
            attempts=attempts.get(sid, 0),
            mistakes=mistakes.get(sid, 0),
            cues_shown=1 if _cue_available(scenario, scenario.stages[sid]) else 0,
        )
        for sid in visited
    ]

    if log.records and log.records[-1].feedback is FeedbackKind.SAVE:
        outcome = "saved"
    elif log.records and log.records[-1].feedback is FeedbackKind.DEATH:
        outcome = "died"
    elif log.abandoned:
        outcome = "abandoned"
    else:
        outcome = "ongoing"

    return DebriefReport(
        scenario_id=scenario.id,
        outcome=outcome,
        total_mistakes=log.records[-1].mistakes_after if log.records else 0,
        stage_rows=rows,
        mistakes_detail=detail,
        stages_visited=len(set(visited)),
        stages_total=len(scenario.stages),
    )


# --- difficulty oracle: exact enumeration ------------------------------------


@dataclass(frozen=True)
class SurvivalEstimate:
    probability: float
    trials: Optional[int]  # None for exact enumeration
    standard_error: float
    exact: bool
    nodes_visited: Optional[int] = None

    def __post_init__(self) -> None:
        if self.exact and self.standard_error != 0.0:
            raise ValueError("exact estimates carry no standard error")


def exact_survival(scenario: Scenario,
                   config: Optional[SessionConfig] = None,
                   node_budget: int = DEFAULT_NODE_BUDGET) -> SurvivalEstimate:
    """Survival probability of a uniformly random trainee, by full
    enumeration of the outcome tree.

    Parameterized menu kinds expand to one leaf per allowed value. Each
    tree node is one draw; the walk from a stage either advances (correct
    leaf), burns a mistake (wrong leaf) or ends at death/save.
    """
    config = config or SessionConfig()
    choice_cache: dict[str, list] = {}
    next_cache: dict[tuple[str, int], Optional[str]] = {}
    nodes = 0

    def choices_at(stage: Stage) -> list:
        cached = choice_cache.get(stage.id)
        if cached is None:
            cached = [(is_correct_choice(stage, a), a) for a in
                      expand_choices(stage)]
            choice_cache[stage.id] = cached
        return cached

    def target_after(stage: Stage, mistakes: int) -> Optional[str]:
        key = (stage.id, mistakes)
        if key not in next_cache:
            health = health_level(mistakes, config.max_mistakes)
            next_cache[key] = next_stage_target(
                stage, effective_vitals(stage.vitals, health))
        return next_cache[key]

    def walk(stage_id: str, mistakes: int, draws_here: int, prob: float) -> float:
        nonlocal nodes
        nodes += 1
        if nodes > node_budget:
            raise BudgetExceeded(
                f"outcome tree exceeded {node_budget} nodes for {scenario.id!r}")
        stage = scenario.stages[stage_id]
        choices = choices_at(stage)
        too_slow = (config.timing_enforced and stage.time_budget is not None
                    and draws_here >= stage.time_budget)
        p = prob / len(choices)
        saved = 0.0
        for correct, _action in choices:
            if correct and not too_slow:
                target = target_after(stage, mistakes)
                if target is None:
                    continue  # dead end; contributes no survival mass
                if target == TERMINAL_SAVE:
                    saved += p
                else:
                    saved += walk(target, mistakes, 0, p)
            else:
                if mistakes + 1 >= config.max_mistakes:
                    continue  # death leaf
                saved += walk(stage_id, mistakes + 1, draws_here + 1, p)
        return saved

    probability = walk(scenario.initial_stage, 0, 0, 1.0)
    return SurvivalEstimate(probability=probability, trials=None,
                            standard_error=0.0, exact=True,
                            nodes_visited=nodes)


# --- difficulty estimate: Monte Carlo ----------------------------------------


def estimate_difficulty(scenario: Scenario, trials: int, seed: int,
                        config: Optional[SessionConfig] = None) -> SurvivalEstimate:
    """Seeded Monte-Carlo survival frequency under the same uniform
    random policy the exact oracle enumerates."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    config = config or SessionConfig()
    max_mistakes = config.max_mistakes

    stage_ids = list(scenario.stages)
    index_of = {sid: i for i, sid in enumerate(stage_ids)}
    stages = [scenario.stages[sid] for sid in stage_ids]
    correct_flags: list[list[bool]] = [
        [is_correct_choice(st, a) for a in expand_choices(st)] for st in stages
    ]
    budgets = [st.time_budget for st in stages]
    timing = config.timing_enforced
    next_cache: dict[tuple[int, int], int] = {}
    SAVE, DEAD_END = -1, -2

    def target_index(si: int, mistakes: int) -> int:
        key = (si, mistakes)
        cached = next_cache.get(key)
        if cached is None:
            health = health_level(mistakes, max_mistakes)
            target = next_stage_target(
                stages[si], effective_vitals(stages[si].vitals, health))
            if target is None:
                cached = DEAD_END
            elif target == TERMINAL_SAVE:
                cached = SAVE
            else:
                cached = index_of[target]
            next_cache[key] = cached
        return cached

    rng = random.Random(seed)
    rand = rng.random
    start = index_of[scenario.initial_stage]
    saves = 0
    for _ in range(trials):
        si = start
        mistakes = 0
        draws_here = 0
        while True:
            flags = correct_flags[si]
            pick = flags[int(rand() * len(flags))]
            if pick and not (timing and budgets[si] is not None
                             and draws_here >= budgets[si]):
                nxt = target_index(si, mistakes)
                if nxt == SAVE:
                    saves += 1
                    break
                if nxt == DEAD_END:
                    break
                si = nxt
                draws_here = 0
            else:
                mistakes += 1
                draws_here += 1
                if mistakes >= max_mistakes:
                    break

    p = saves / trials
    se = math.sqrt(p * (1.0 - p) / trials)
    return SurvivalEstimate(probability=p, trials=trials, standard_error=se,
                            exact=False)
