"""Core domain types for resuscitation training scenarios.

A scenario is a guarded, acyclic graph of decision stages. Each stage
presents the infant's vitals and a menu of clinical actions; choosing a
correct entry advances the trainee toward the SAVE terminal, choosing a
wrong entry (or a wrong parameter value) counts as a mistake.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Optional

if TYPE_CHECKING:
    from .dsl import ScenarioLibrary
    from .guidance import DialogueTree

TERMINAL_SAVE = "SAVE"

#: Number of segments on the infant health bar.
MAX_HEALTH = 4


class ModelError(Exception):
    """Base class for scenario-model errors."""


class NoSavePath(ModelError):
    """No zero-mistake route from the initial stage to the SAVE terminal."""


class Breathing(str, Enum):
    APNEIC = "apneic"
    GASPING = "gasping"
    LABORED = "labored"
    REGULAR = "regular"


class Tone(str, Enum):
    FLOPPY = "floppy"
    SOME_FLEXION = "some_flexion"
    ACTIVE = "active"


class GuidanceMode(str, Enum):
    COMPLETE = "complete"
    PARTIAL = "partial"


class ActionKind(str, Enum):
    """The nine clinical actions a scenario menu may offer."""

    WARM_DRY_STIMULATE = "warm_dry_stimulate"
    SUCTION_AIRWAY = "suction_airway"
    ASSESS_HEART_RATE = "assess_heart_rate"
    PULSE_OXIMETER = "pulse_oximeter"
    POSITIVE_PRESSURE_VENTILATION = "positive_pressure_ventilation"
    ADJUST_AIRWAY = "adjust_airway"
    SUPPLEMENTAL_OXYGEN = "supplemental_oxygen"
    CHEST_COMPRESSIONS = "chest_compressions"
    EPINEPHRINE = "epinephrine"

    @property
    def parameterized(self) -> bool:
        return self in PARAM_SPECS

    @property
    def label(self) -> str:
        return _KIND_LABELS[self]

    @property
    def param_spec(self) -> Optional["ParamSpec"]:
        return PARAM_SPECS.get(self)


_KIND_LABELS = {
    ActionKind.WARM_DRY_STIMULATE: "warm, dry and stimulate",
    ActionKind.SUCTION_AIRWAY: "suction the airway",
    ActionKind.ASSESS_HEART_RATE: "assess the heart rate",
    ActionKind.PULSE_OXIMETER: "attach a pulse oximeter",
    ActionKind.POSITIVE_PRESSURE_VENTILATION: "positive-pressure ventilation",
    ActionKind.ADJUST_AIRWAY: "adjust the mask and airway",
    ActionKind.SUPPLEMENTAL_OXYGEN: "supplemental oxygen",
    ActionKind.CHEST_COMPRESSIONS: "chest compressions",
    ActionKind.EPINEPHRINE: "give epinephrine",
}


@dataclass(frozen=True)
class ParamValue:
    """One selectable value of an action parameter, with display text."""

    value: str
    label: str


@dataclass(frozen=True)
class ParamSpec:
    """Finite, ordered choice set for a parameterized action kind."""

    action_kind: "ActionKind"
    allowed_values: tuple[ParamValue, ...]

    def __post_init__(self) -> None:
        if len(self.allowed_values) < 2:
            raise ValueError(
                f"parameter for {self.action_kind.value} needs at least 2 values"
            )
        values = [v.value for v in self.allowed_values]
        labels = [v.label for v in self.allowed_values]
        if len(set(values)) != len(values) or len(set(labels)) != len(labels):
            raise ValueError(f"duplicate parameter values for {self.action_kind.value}")

    @property
    def values(self) -> tuple[str, ...]:
        return tuple(v.value for v in self.allowed_values)


PARAM_SPECS: dict[ActionKind, ParamSpec] = {}


def _register_spec(kind: ActionKind, *values: tuple[str, str]) -> None:
    PARAM_SPECS[kind] = ParamSpec(kind, tuple(ParamValue(v, l) for v, l in values))


_register_spec(
    ActionKind.CHEST_COMPRESSIONS,
    ("3:1", "3 compressions to 1 breath"),
    ("5:1", "5 compressions to 1 breath"),
    ("15:2", "15 compressions to 2 breaths"),
)
_register_spec(
    ActionKind.SUPPLEMENTAL_OXYGEN,
    ("21%", "room air"),
    ("40%", "blended 40% oxygen"),
    ("100%", "pure oxygen"),
)
_register_spec(
    ActionKind.EPINEPHRINE,
    ("IV", "intravenous line"),
    ("ET", "endotracheal tube"),
)


@dataclass(frozen=True)
class ActionInstance:
    """An action kind plus the parameter value the trainee picked, if any."""

    kind: ActionKind
    param: Optional[str] = None

    def __post_init__(self) -> None:
        spec = PARAM_SPECS.get(self.kind)
        if spec is None:
            if self.param is not None:
                raise ValueError(f"{self.kind.value} takes no parameter")
        else:
            if self.param is None:
                raise ValueError(f"{self.kind.value} requires a parameter")
            if self.param not in spec.values:
                raise ValueError(
                    f"{self.param!r} is not a valid parameter for {self.kind.value}"
                )

    def describe(self) -> str:
        if self.param is None:
            return self.kind.label
        return f"{self.kind.label} ({self.param})"


@dataclass(frozen=True)
class InfantVitals:
    """The physiological state presented to the trainee at a stage."""

    heart_rate: int
    breathing: Breathing
    tone: Tone
    health: int

    def __post_init__(self) -> None:
        if self.heart_rate < 0:
            raise ValueError("heart_rate must be non-negative")
        if not 0 <= self.health <= MAX_HEALTH:
            raise ValueError(f"health must be within 0..{MAX_HEALTH}")


@dataclass(frozen=True)
class GuidanceCue:
    """A doctor hint attached to a stage."""

    text: str
    names_correct_action: bool = False

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("cue text must be non-empty")


@dataclass(frozen=True)
class MenuEntry:
    """One authored menu row: an action pattern plus its correctness.

    ``param`` pins the entry to one parameter value. A correct
    parameterized entry uses it as the required value; a wrong entry may
    pin a value just to attach a specific mistake utterance to it.
    """

    kind: ActionKind
    correct: bool
    param: Optional[str] = None
    mistake_utterance: Optional[str] = None

    def __post_init__(self) -> None:
        if self.param is not None:
            spec = PARAM_SPECS.get(self.kind)
            if spec is None:
                raise ValueError(f"{self.kind.value} takes no parameter")
            if self.param not in spec.values:
                raise ValueError(
                    f"{self.param!r} is not a valid parameter for {self.kind.value}"
                )


class GuardOp(str, Enum):
    LT = "<"
    LE = "<="
    EQ = "=="
    NE = "!="
    GE = ">="
    GT = ">"


_NUMERIC_FIELDS = ("heart_rate", "health")
_ENUM_FIELDS = {"breathing": Breathing, "tone": Tone}
GUARD_FIELDS = _NUMERIC_FIELDS + tuple(_ENUM_FIELDS)


@dataclass(frozen=True)
class Comparison:
    """A single clause of a transition guard, e.g. ``heart_rate < 60``."""

    field: str
    op: GuardOp
    value: object  # int for numeric fields, Breathing/Tone for enum fields

    def __post_init__(self) -> None:
        if self.field in _NUMERIC_FIELDS:
            if not isinstance(self.value, int):
                raise ValueError(f"guard on {self.field} needs an integer value")
        elif self.field in _ENUM_FIELDS:
            if not isinstance(self.value, _ENUM_FIELDS[self.field]):
                raise ValueError(f"guard on {self.field} needs a {self.field} value")
            if self.op not in (GuardOp.EQ, GuardOp.NE):
                raise ValueError(f"guard on {self.field} supports only == and !=")
        else:
            raise ValueError(f"unknown guard field {self.field!r}")

    def holds(self, vitals: InfantVitals) -> bool:
        actual = getattr(vitals, self.field)
        if self.op is GuardOp.EQ:
            return actual == self.value
        if self.op is GuardOp.NE:
            return actual != self.value
        if self.op is GuardOp.LT:
            return actual < self.value
        if self.op is GuardOp.LE:
            return actual <= self.value
        if self.op is GuardOp.GE:
            return actual >= self.value
        return actual > self.value


@dataclass(frozen=True)
class Guard:
    """Conjunction of comparisons over the presented vitals."""

    clauses: tuple[Comparison, ...]

    def holds(self, vitals: InfantVitals) -> bool:
        return all(c.holds(vitals) for c in self.clauses)


@dataclass(frozen=True)
class Transition:
    """An outgoing edge; ``guard`` of None means 'always'."""

    target: str  # stage id or TERMINAL_SAVE
    guard: Optional[Guard] = None


@dataclass
class Stage:
    id: str
    prompt: str
    vitals: InfantVitals
    menu: tuple[MenuEntry, ...]
    transitions: tuple[Transition, ...]
    guidance_cue: Optional[GuidanceCue] = None
    time_budget: Optional[int] = None
    line: int = field(default=0, compare=False)

    def correct_entries(self) -> list[MenuEntry]:
        return [e for e in self.menu if e.correct]

    def menu_kinds(self) -> list[ActionKind]:
        """Distinct kinds offered at this stage, in authored order."""
        seen: list[ActionKind] = []
        for e in self.menu:
            if e.kind not in seen:
                seen.append(e.kind)
        return seen


@dataclass(frozen=True)
class ScenarioMetrics:
    """Length and action variety of the best zero-mistake completion."""

    optimal_path_length: int
    distinct_actions: int

    def __post_init__(self) -> None:
        if self.optimal_path_length < 1 or self.distinct_actions < 1:
            raise ValueError("metrics must be >= 1")
        if self.distinct_actions > min(self.optimal_path_length, len(ActionKind)):
            raise ValueError("distinct_actions exceeds possible maximum")


@dataclass
class Scenario:
    id: str
    title: str
    difficulty_tier: int
    initial_stage: str
    stages: dict[str, Stage]
    guidance_mode: GuidanceMode
    declared_metrics: Optional[ScenarioMetrics] = None
    dialogue: Optional["DialogueTree"] = None
    format_version: int = 1
    source_path: Optional[str] = field(default=None, compare=False)
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    stage_id: Optional[str] = None
    line: int = 0


@dataclass
class ValidationReport:
    scenario_id: str
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def summary(self) -> str:
        if self.ok:
            return f"{self.scenario_id}: OK"
        lines = [f"{self.scenario_id}: {len(self.violations)} violation(s)"]
        lines += [f"  [{v.code}] {v.message}" for v in self.violations]
        return "\n".join(lines)


def effective_vitals(vitals: InfantVitals, health: int) -> InfantVitals:
    """Authored stage vitals with the session health level substituted."""
    return replace(vitals, health=max(0, min(MAX_HEALTH, health)))


def next_stage_target(stage: Stage, vitals: InfantVitals) -> Optional[str]:
    """First transition whose guard holds, in authored order."""
    for t in stage.transitions:
        if t.guard is None or t.guard.holds(vitals):
            return t.target
    return None


def is_correct_choice(stage: Stage, action: ActionInstance) -> bool:
    """Whether a chosen action matches any correct entry of the stage.

    A correct parameterized entry that omits its param value (an
    authoring error flagged by validation) is treated as matching any
    value rather than making the stage unwinnable.
    """
    for e in stage.menu:
        if not e.correct or e.kind is not action.kind:
            continue
        if e.param is None or e.param == action.param:
            return True
    return False


def expand_choices(stage: Stage) -> list[ActionInstance]:
    """Every concrete action the stage menu offers.

    Parameterized kinds expand to one choice per allowed value; duplicate
    kinds in the authored menu collapse into a single submenu.
    """
    choices: list[ActionInstance] = []
    for kind in stage.menu_kinds():
        spec = PARAM_SPECS.get(kind)
        if spec is None:
            choices.append(ActionInstance(kind))
        else:
            choices.extend(ActionInstance(kind, v) for v in spec.values)
    return choices


def zero_mistake_walk(scenario: Scenario) -> list[Stage]:
    """The stage chain of a mistake-free run (health stays full).

    Raises NoSavePath when the chain cannot reach SAVE via correct
    entries and satisfied transitions.
    """
    chain: list[Stage] = []
    seen: set[str] = set()
    sid = scenario.initial_stage
    while sid != TERMINAL_SAVE:
        if sid in seen:
            raise NoSavePath(f"stage {sid!r} revisited on the zero-mistake walk")
        stage = scenario.stages.get(sid)
        if stage is None:
            raise NoSavePath(f"walk reached unknown stage {sid!r}")
        if not stage.correct_entries():
            raise NoSavePath(f"stage {sid!r} has no correct entry")
        seen.add(sid)
        chain.append(stage)
        target = next_stage_target(stage, effective_vitals(stage.vitals, MAX_HEALTH))
        if target is None:
            raise NoSavePath(f"no transition satisfied at stage {sid!r}")
        sid = target
    if not chain:
        raise NoSavePath("initial stage is already terminal")
    return chain


def compute_metrics(scenario: Scenario) -> ScenarioMetrics:
    """Exhaustive search over zero-mistake completions.

    The transition taken after a correct action is fixed by the guards,
    so all zero-mistake runs share one stage chain; the search minimizes
    the number of distinct kinds over the per-stage correct choices.
    """
    chain = zero_mistake_walk(scenario)
    kind_options: list[tuple[ActionKind, ...]] = []
    for stage in chain:
        kinds = tuple(dict.fromkeys(e.kind for e in stage.correct_entries()))
        kind_options.append(kinds)

    best = len(ActionKind) + 1

    def search(idx: int, chosen: frozenset[ActionKind]) -> None:
        nonlocal best
        if len(chosen) >= best:
            return
        if idx == len(kind_options):
            best = len(chosen)
            return
        for kind in kind_options[idx]:
            search(idx + 1, chosen | {kind})

    search(0, frozenset())
    return ScenarioMetrics(optimal_path_length=len(chain), distinct_actions=best)


def _reachability(scenario: Scenario) -> tuple[set[str], bool, bool]:
    """DFS over all transition edges: (reached stages, save seen, cycle seen)."""
    reached: set[str] = set()
    save_seen = False
    cycle_seen = False
    on_path: set[str] = set()

    def visit(sid: str) -> None:
        nonlocal save_seen, cycle_seen
        if sid == TERMINAL_SAVE:
            save_seen = True
            return
        if sid in on_path:
            cycle_seen = True
            return
        if sid in reached or sid not in scenario.stages:
            return
        reached.add(sid)
        on_path.add(sid)
        for t in scenario.stages[sid].transitions:
            visit(t.target)
        on_path.discard(sid)

    visit(scenario.initial_stage)
    return reached, save_seen, cycle_seen


def _validate_dialogue(scenario: Scenario, out: list[Violation]) -> None:
    tree = scenario.dialogue
    if tree is None:
        return
    if tree.root not in tree.nodes:
        out.append(Violation("dialogue-malformed", f"dialogue root {tree.root!r} undefined"))
        return
    referenced: set[str] = set()
    for node in tree.nodes.values():
        for _, child in node.children:
            if child not in tree.nodes:
                out.append(Violation(
                    "dialogue-malformed",
                    f"dialogue node {node.id!r} links to unknown node {child!r}",
                ))
            elif child in referenced or child == tree.root:
                out.append(Violation(
                    "dialogue-malformed",
                    f"dialogue node {child!r} has more than one parent",
                ))
            else:
                referenced.add(child)


def validate_scenario(scenario: Scenario) -> ValidationReport:
    """Collect every structural violation; never raises."""
    out: list[Violation] = []

    if not 0 <= scenario.difficulty_tier <= 3:
        out.append(Violation("bad-tier", f"tier {scenario.difficulty_tier} outside 0..3"))
    if not scenario.stages:
        out.append(Violation("no-stages", "scenario has no stages"))
        return ValidationReport(scenario.id, out)
    if scenario.initial_stage not in scenario.stages:
        out.append(Violation(
            "missing-initial", f"initial stage {scenario.initial_stage!r} undefined"
        ))

    for stage in scenario.stages.values():
        if not stage.menu:
            out.append(Violation("empty-menu", f"stage {stage.id!r} has an empty menu",
                                 stage.id, stage.line))
        elif not stage.correct_entries():
            out.append(Violation("no-correct-entry",
                                 f"stage {stage.id!r} has no correct menu entry",
                                 stage.id, stage.line))
        for e in stage.correct_entries():
            if e.kind.parameterized and e.param is None:
                out.append(Violation(
                    "missing-correct-param",
                    f"correct entry {e.kind.value} at stage {stage.id!r} "
                    f"does not pin its parameter value",
                    stage.id, stage.line))
        if not stage.transitions:
            out.append(Violation("no-transitions",
                                 f"stage {stage.id!r} has no transitions",
                                 stage.id, stage.line))
        else:
            if stage.transitions[-1].guard is not None:
                out.append(Violation(
                    "no-unconditional-transition",
                    f"stage {stage.id!r} must end with an unguarded transition",
                    stage.id, stage.line))
            for t in stage.transitions:
                if t.target != TERMINAL_SAVE and t.target not in scenario.stages:
                    out.append(Violation(
                        "dangling-transition",
                        f"stage {stage.id!r} transitions to unknown stage {t.target!r}",
                        stage.id, stage.line))
        if stage.time_budget is not None and stage.time_budget < 1:
            out.append(Violation("bad-time-budget",
                                 f"stage {stage.id!r} time budget must be >= 1",
                                 stage.id, stage.line))

    if scenario.initial_stage in scenario.stages:
        reached, save_seen, cycle_seen = _reachability(scenario)
        if cycle_seen:
            out.append(Violation("cycle", "stage graph has a cycle reachable "
                                          "from the initial stage"))
        if not save_seen:
            out.append(Violation("save-unreachable",
                                 "SAVE is unreachable from the initial stage"))
        for sid, stage in scenario.stages.items():
            if sid not in reached:
                out.append(Violation("unreachable-stage",
                                     f"stage {sid!r} is unreachable",
                                     sid, stage.line))

    if scenario.difficulty_tier == 0:
        if scenario.guidance_mode is not GuidanceMode.COMPLETE:
            out.append(Violation("tutorial-guidance-mode",
                                 "tier-0 scenarios must use complete guidance"))
        for stage in scenario.stages.values():
            cue = stage.guidance_cue
            if cue is None or not cue.names_correct_action:
                out.append(Violation(
                    "tutorial-guidance-incomplete",
                    f"stage {stage.id!r} lacks a cue naming the correct action",
                    stage.id, stage.line))

    _validate_dialogue(scenario, out)

    if not out:
        try:
            computed = compute_metrics(scenario)
        except NoSavePath as exc:
            out.append(Violation("no-zero-mistake-completion", str(exc)))
        else:
            declared = scenario.declared_metrics
            if declared is not None and declared != computed:
                out.append(Violation(
                    "metrics-mismatch",
                    f"declared metrics ({declared.optimal_path_length}, "
                    f"{declared.distinct_actions}) != computed "
                    f"({computed.optimal_path_length}, {computed.distinct_actions})"))

    return ValidationReport(scenario.id, out)


def action_vocabulary(library: "ScenarioLibrary") -> set[ActionKind]:
    """Union of action kinds referenced by every scenario in the library."""
    if not library.scenarios:
        raise ValueError("library is empty")
    kinds: set[ActionKind] = set()
    for scenario in library.scenarios:
        for stage in scenario.stages.values():
            kinds.update(e.kind for e in stage.menu)
    return kinds
