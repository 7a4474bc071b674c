"""Line-oriented scenario source format (`.retain` files).

One file holds one scenario as nested blocks::

    format_version 1
    scenario first_breaths {
      title "First breaths"
      tier 1
      guidance partial
      metrics 6 5
      start warm
      stage warm {
        prompt "A term newborn arrives limp."
        vitals heart_rate 80 breathing apneic tone floppy health 4
        cue "Dry the baby first." names-correct
        entry warm_dry_stimulate correct
        entry chest_compressions param="5:1" wrong "Far too early."
        next reassess if heart_rate < 100
        next SAVE
      }
    }

Parsing is pure and reports the first syntax error with its position;
serialization is canonical (fixed field order, two-space indent) so
``parse(serialize(s)) == s`` and the bytes are stable across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .guidance import DialogueNode, DialogueTree, Speaker
from .model import (
    TERMINAL_SAVE,
    ActionKind,
    Breathing,
    Comparison,
    Guard,
    GuardOp,
    GuidanceCue,
    GuidanceMode,
    InfantVitals,
    MenuEntry,
    Scenario,
    ScenarioMetrics,
    Stage,
    Tone,
    Transition,
    validate_scenario,
)

SCENARIO_FILE_SUFFIX = ".retain"
FORMAT_VERSION = 1


class ParseError(Exception):
    """Syntax failure with a 1-based source position."""

    def __init__(self, line: int, col: int, message: str,
                 expected: Optional[str] = None):
        detail = message if expected is None else f"{message} (expected {expected})"
        super().__init__(f"{line}:{col}: {detail}")
        self.line = line
        self.col = col
        self.message = message
        self.expected = expected


class LibraryError(Exception):
    """One or more library files failed to parse or validate."""

    def __init__(self, failures: list[str]):
        super().__init__("\n".join(failures))
        self.failures = failures


@dataclass
class ScenarioLibrary:
    scenarios: list[Scenario]
    source_paths: list[Path] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def by_id(self, scenario_id: str) -> Optional[Scenario]:
        for sc in self.scenarios:
            if sc.id == scenario_id:
                return sc
        return None


# --- tokenizer -------------------------------------------------------------

_PUNCT = ("->", "<=", ">=", "==", "!=", "{", "}", "=", "<", ">")
_ESCAPES = {"\\": "\\", '"': '"', "n": "\n", "t": "\t"}


@dataclass(frozen=True)
class _Token:
    type: str  # ID INT STRING PUNCT NEWLINE EOF
    value: str
    line: int
    col: int


def _is_id_start(ch: str) -> bool:
    return ch.isalpha() or ch == "_"


def _is_id_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, i = 1, 1, 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            tokens.append(_Token("NEWLINE", "\n", line, col))
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
                col += 1
            continue
        if ch == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            buf: list[str] = []
            while True:
                if i >= n or text[i] == "\n":
                    raise ParseError(line, col, "unterminated string")
                c = text[i]
                if c == '"':
                    i += 1
                    col += 1
                    break
                if c == "\\":
                    if i + 1 >= n or text[i + 1] not in _ESCAPES:
                        raise ParseError(line, col, "invalid string escape")
                    buf.append(_ESCAPES[text[i + 1]])
                    i += 2
                    col += 2
                    continue
                buf.append(c)
                i += 1
                col += 1
            tokens.append(_Token("STRING", "".join(buf), start_line, start_col))
            continue
        if ch.isdigit():
            start_col = col
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(_Token("INT", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if _is_id_start(ch):
            start_col = col
            j = i + 1
            while j < n and (
                _is_id_char(text[j])
                or (text[j] == "-" and j + 1 < n and _is_id_char(text[j + 1]))
            ):
                j += 1
            tokens.append(_Token("ID", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(_Token("PUNCT", p, line, col))
                i += len(p)
                col += len(p)
                break
        else:
            raise ParseError(line, col, f"unexpected character {ch!r}")
    tokens.append(_Token("EOF", "", line, col))
    return tokens


# --- parser ----------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.type != "EOF":
            self.pos += 1
        return tok

    def fail(self, message: str, expected: Optional[str] = None,
             tok: Optional[_Token] = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(tok.line, tok.col, message, expected)

    def expect(self, type_: str, value: Optional[str] = None,
               expected: Optional[str] = None) -> _Token:
        tok = self.peek()
        if tok.type != type_ or (value is not None and tok.value != value):
            what = expected or value or type_.lower()
            got = "end of input" if tok.type == "EOF" else repr(tok.value)
            raise self.fail(f"unexpected {got}", expected=what)
        return self.advance()

    def expect_newline(self) -> None:
        tok = self.peek()
        if tok.type == "EOF":
            return
        self.expect("NEWLINE", expected="end of line")
        self.skip_newlines()

    def skip_newlines(self) -> None:
        while self.peek().type == "NEWLINE":
            self.advance()

    def expect_int(self, what: str) -> int:
        return int(self.expect("INT", expected=what).value)

    def expect_id(self, what: str) -> str:
        return self.expect("ID", expected=what).value

    def expect_string(self, what: str) -> str:
        return self.expect("STRING", expected=what).value

    # -- grammar ------------------------------------------------------------

    def parse_file(self) -> Scenario:
        self.skip_newlines()
        version = FORMAT_VERSION
        if self.peek().type == "ID" and self.peek().value == "format_version":
            self.advance()
            version = self.expect_int("format version number")
            self.expect_newline()
        scenario = self.parse_scenario(version)
        self.skip_newlines()
        tok = self.peek()
        if tok.type != "EOF":
            raise self.fail("content after scenario block", expected="end of file")
        return scenario

    def parse_scenario(self, version: int) -> Scenario:
        kw = self.expect("ID", "scenario", expected="'scenario'")
        sid = self.expect_id("scenario id")
        self.expect("PUNCT", "{")
        self.expect_newline()

        title: Optional[str] = None
        tier: Optional[int] = None
        mode: Optional[GuidanceMode] = None
        metrics: Optional[ScenarioMetrics] = None
        start: Optional[str] = None
        dialogue: Optional[DialogueTree] = None
        stages: dict[str, Stage] = {}

        while True:
            tok = self.peek()
            if tok.type == "PUNCT" and tok.value == "}":
                self.advance()
                break
            if tok.type != "ID":
                raise self.fail(f"unexpected {tok.value!r}",
                                expected="a scenario field, 'stage' or '}'")
            word = tok.value
            if word == "title":
                if title is not None:
                    raise self.fail("duplicate title")
                self.advance()
                title = self.expect_string("quoted title")
                self.expect_newline()
            elif word == "tier":
                if tier is not None:
                    raise self.fail("duplicate tier")
                self.advance()
                tier = self.expect_int("tier 0..3")
                self.expect_newline()
            elif word == "guidance":
                if mode is not None:
                    raise self.fail("duplicate guidance")
                self.advance()
                value = self.expect_id("'complete' or 'partial'")
                try:
                    mode = GuidanceMode(value)
                except ValueError:
                    raise self.fail(f"unknown guidance mode {value!r}",
                                    expected="'complete' or 'partial'") from None
                self.expect_newline()
            elif word == "metrics":
                if metrics is not None:
                    raise self.fail("duplicate metrics")
                self.advance()
                length = self.expect_int("optimal path length")
                distinct = self.expect_int("distinct action count")
                try:
                    metrics = ScenarioMetrics(length, distinct)
                except ValueError as exc:
                    raise self.fail(str(exc)) from None
                self.expect_newline()
            elif word == "start":
                if start is not None:
                    raise self.fail("duplicate start")
                self.advance()
                start = self.expect_id("stage id")
                self.expect_newline()
            elif word == "dialogue":
                if dialogue is not None:
                    raise self.fail("duplicate dialogue block")
                dialogue = self.parse_dialogue()
            elif word == "stage":
                stage = self.parse_stage()
                if stage.id in stages:
                    raise self.fail(f"duplicate stage id {stage.id!r}", tok=tok)
                stages[stage.id] = stage
            else:
                raise self.fail(f"unknown scenario field {word!r}",
                                expected="title, tier, guidance, metrics, "
                                         "start, dialogue or stage")

        if not stages:
            raise self.fail("scenario has no stages", tok=kw)
        return Scenario(
            id=sid,
            title=title if title is not None else sid,
            difficulty_tier=tier if tier is not None else 1,
            initial_stage=start if start is not None else next(iter(stages)),
            stages=stages,
            guidance_mode=mode if mode is not None else GuidanceMode.PARTIAL,
            declared_metrics=metrics,
            dialogue=dialogue,
            format_version=version,
            line=kw.line,
        )

    def parse_dialogue(self) -> DialogueTree:
        self.expect("ID", "dialogue")
        self.expect("PUNCT", "{")
        self.expect_newline()
        nodes: dict[str, DialogueNode] = {}
        while True:
            tok = self.peek()
            if tok.type == "PUNCT" and tok.value == "}":
                self.advance()
                self.expect_newline()
                break
            self.expect("ID", "say", expected="'say' or '}'")
            node_id = self.expect_id("dialogue node id")
            if node_id in nodes:
                raise self.fail(f"duplicate dialogue node id {node_id!r}", tok=tok)
            speaker_word = self.expect_id("'doctor' or 'trainee'")
            try:
                speaker = Speaker(speaker_word)
            except ValueError:
                raise self.fail(f"unknown speaker {speaker_word!r}",
                                expected="'doctor' or 'trainee'") from None
            text = self.expect_string("quoted dialogue text")
            children: list[tuple[str, str]] = []
            if self.peek().type == "PUNCT" and self.peek().value == "{":
                self.advance()
                self.expect_newline()
                while not (self.peek().type == "PUNCT" and self.peek().value == "}"):
                    self.expect("ID", "choice", expected="'choice' or '}'")
                    label = self.expect_string("quoted choice label")
                    self.expect("PUNCT", "->")
                    children.append((label, self.expect_id("dialogue node id")))
                    self.expect_newline()
                self.advance()
            self.expect_newline()
            nodes[node_id] = DialogueNode(node_id, speaker, text, tuple(children))
        if not nodes:
            raise self.fail("dialogue block has no nodes")
        return DialogueTree(root=next(iter(nodes)), nodes=nodes)

    def parse_stage(self) -> Stage:
        kw = self.expect("ID", "stage")
        sid = self.expect_id("stage id")
        self.expect("PUNCT", "{")
        self.expect_newline()

        prompt: Optional[str] = None
        vitals: Optional[InfantVitals] = None
        cue: Optional[GuidanceCue] = None
        time_budget: Optional[int] = None
        menu: list[MenuEntry] = []
        transitions: list[Transition] = []

        while True:
            tok = self.peek()
            if tok.type == "PUNCT" and tok.value == "}":
                self.advance()
                self.expect_newline()
                break
            if tok.type != "ID":
                raise self.fail(f"unexpected {tok.value!r}",
                                expected="a stage field or '}'")
            word = tok.value
            if word == "prompt":
                if prompt is not None:
                    raise self.fail("duplicate prompt")
                self.advance()
                prompt = self.expect_string("quoted prompt")
                self.expect_newline()
            elif word == "vitals":
                if vitals is not None:
                    raise self.fail("duplicate vitals")
                self.advance()
                vitals = self.parse_vitals()
            elif word == "time_budget":
                if time_budget is not None:
                    raise self.fail("duplicate time_budget")
                self.advance()
                time_budget = self.expect_int("logical time budget")
                self.expect_newline()
            elif word == "cue":
                if cue is not None:
                    raise self.fail("duplicate cue")
                self.advance()
                text = self.expect_string("quoted cue text")
                names = False
                if self.peek().type == "ID" and self.peek().value == "names-correct":
                    self.advance()
                    names = True
                try:
                    cue = GuidanceCue(text, names)
                except ValueError as exc:
                    raise self.fail(str(exc), tok=tok) from None
                self.expect_newline()
            elif word == "entry":
                menu.append(self.parse_entry())
            elif word == "next":
                transitions.append(self.parse_transition())
            else:
                raise self.fail(f"unknown stage field {word!r}",
                                expected="prompt, vitals, time_budget, cue, "
                                         "entry or next")

        if prompt is None:
            raise self.fail(f"stage {sid!r} is missing a prompt", tok=kw)
        if vitals is None:
            raise self.fail(f"stage {sid!r} is missing vitals", tok=kw)
        return Stage(
            id=sid,
            prompt=prompt,
            vitals=vitals,
            menu=tuple(menu),
            transitions=tuple(transitions),
            guidance_cue=cue,
            time_budget=time_budget,
            line=kw.line,
        )

    def parse_vitals(self) -> InfantVitals:
        fields: dict[str, object] = {}
        first = self.peek()
        while self.peek().type == "ID":
            key_tok = self.advance()
            key = key_tok.value
            if key in fields:
                raise self.fail(f"duplicate vitals field {key!r}", tok=key_tok)
            if key == "heart_rate":
                fields[key] = self.expect_int("beats per minute")
            elif key == "health":
                fields[key] = self.expect_int("health 0..4")
            elif key == "breathing":
                value = self.expect_id("a breathing state")
                try:
                    fields[key] = Breathing(value)
                except ValueError:
                    raise self.fail(
                        f"unknown breathing state {value!r}",
                        expected="one of " + ", ".join(b.value for b in Breathing),
                    ) from None
            elif key == "tone":
                value = self.expect_id("a muscle tone")
                try:
                    fields[key] = Tone(value)
                except ValueError:
                    raise self.fail(
                        f"unknown tone {value!r}",
                        expected="one of " + ", ".join(t.value for t in Tone),
                    ) from None
            else:
                raise self.fail(f"unknown vitals field {key!r}", tok=key_tok,
                                expected="heart_rate, breathing, tone or health")
        missing = [k for k in ("heart_rate", "breathing", "tone", "health")
                   if k not in fields]
        if missing:
            raise self.fail(f"vitals missing {', '.join(missing)}", tok=first)
        self.expect_newline()
        try:
            return InfantVitals(**fields)  # type: ignore[arg-type]
        except ValueError as exc:
            raise ParseError(first.line, first.col, str(exc)) from None

    def parse_entry(self) -> MenuEntry:
        self.expect("ID", "entry")
        kind_tok = self.expect("ID", expected="an action kind")
        try:
            kind = ActionKind(kind_tok.value)
        except ValueError:
            raise self.fail(f"unknown action kind {kind_tok.value!r}", tok=kind_tok,
                            expected="one of the 9 supported actions") from None
        param: Optional[str] = None
        param_tok = kind_tok
        if self.peek().type == "ID" and self.peek().value == "param":
            self.advance()
            self.expect("PUNCT", "=")
            param_tok = self.peek()
            param = self.expect_string("quoted parameter value")
        verdict = self.expect_id("'correct' or 'wrong'")
        if verdict not in ("correct", "wrong"):
            raise self.fail(f"expected 'correct' or 'wrong', got {verdict!r}")
        utterance: Optional[str] = None
        if self.peek().type == "STRING":
            utterance = self.advance().value
        self.expect_newline()
        try:
            return MenuEntry(kind=kind, correct=(verdict == "correct"),
                             param=param, mistake_utterance=utterance)
        except ValueError as exc:
            raise ParseError(param_tok.line, param_tok.col, str(exc)) from None

    def parse_transition(self) -> Transition:
        self.expect("ID", "next")
        target = self.expect_id("a stage id or SAVE")
        guard: Optional[Guard] = None
        if self.peek().type == "ID" and self.peek().value == "if":
            self.advance()
            guard = self.parse_guard()
        self.expect_newline()
        return Transition(target=target, guard=guard)

    def parse_guard(self) -> Guard:
        clauses = [self.parse_comparison()]
        while self.peek().type == "ID" and self.peek().value == "and":
            self.advance()
            clauses.append(self.parse_comparison())
        return Guard(tuple(clauses))

    def parse_comparison(self) -> Comparison:
        field_tok = self.expect("ID", expected="a vitals field")
        op_tok = self.peek()
        if op_tok.type != "PUNCT" or op_tok.value not in (
                "<", "<=", "==", "!=", ">=", ">"):
            raise self.fail("expected a comparison operator")
        self.advance()
        op = GuardOp(op_tok.value)
        value_tok = self.peek()
        value: object
        if value_tok.type == "INT":
            self.advance()
            value = int(value_tok.value)
        elif value_tok.type == "ID":
            self.advance()
            if field_tok.value == "breathing":
                try:
                    value = Breathing(value_tok.value)
                except ValueError:
                    raise self.fail(f"unknown breathing state {value_tok.value!r}",
                                    tok=value_tok) from None
            elif field_tok.value == "tone":
                try:
                    value = Tone(value_tok.value)
                except ValueError:
                    raise self.fail(f"unknown tone {value_tok.value!r}",
                                    tok=value_tok) from None
            else:
                raise self.fail(f"{field_tok.value} compares against a number",
                                tok=value_tok)
        else:
            raise self.fail("expected a guard value", tok=value_tok)
        try:
            return Comparison(field_tok.value, op, value)
        except ValueError as exc:
            raise ParseError(field_tok.line, field_tok.col, str(exc)) from None


def parse(text: str) -> Scenario:
    """Parse one scenario source file; raises ParseError on the first
    syntax problem. Semantic checks are validate_scenario's job."""
    return _Parser(text).parse_file()


# --- serializer ------------------------------------------------------------


def _quote(s: str) -> str:
    out = s.replace("\\", "\\\\").replace('"', '\\"')
    out = out.replace("\n", "\\n").replace("\t", "\\t")
    return f'"{out}"'


def _guard_text(guard: Guard) -> str:
    parts = []
    for c in guard.clauses:
        value = c.value.value if hasattr(c.value, "value") else str(c.value)
        parts.append(f"{c.field} {c.op.value} {value}")
    return " and ".join(parts)


def serialize(scenario: Scenario) -> str:
    """Canonical text form; stable bytes for equal scenarios."""
    out: list[str] = [f"format_version {scenario.format_version}"]
    out.append(f"scenario {scenario.id} {{")
    out.append(f"  title {_quote(scenario.title)}")
    out.append(f"  tier {scenario.difficulty_tier}")
    out.append(f"  guidance {scenario.guidance_mode.value}")
    if scenario.declared_metrics is not None:
        m = scenario.declared_metrics
        out.append(f"  metrics {m.optimal_path_length} {m.distinct_actions}")
    out.append(f"  start {scenario.initial_stage}")
    if scenario.dialogue is not None:
        tree = scenario.dialogue
        out.append("  dialogue {")
        ordered = [tree.root] + [nid for nid in tree.nodes if nid != tree.root]
        for nid in ordered:
            node = tree.nodes[nid]
            head = f"    say {node.id} {node.speaker.value} {_quote(node.text)}"
            if node.children:
                out.append(head + " {")
                for label, child in node.children:
                    out.append(f"      choice {_quote(label)} -> {child}")
                out.append("    }")
            else:
                out.append(head)
        out.append("  }")
    for stage in scenario.stages.values():
        out.append(f"  stage {stage.id} {{")
        out.append(f"    prompt {_quote(stage.prompt)}")
        v = stage.vitals
        out.append(
            f"    vitals heart_rate {v.heart_rate} breathing {v.breathing.value}"
            f" tone {v.tone.value} health {v.health}")
        if stage.time_budget is not None:
            out.append(f"    time_budget {stage.time_budget}")
        if stage.guidance_cue is not None:
            cue = stage.guidance_cue
            suffix = " names-correct" if cue.names_correct_action else ""
            out.append(f"    cue {_quote(cue.text)}{suffix}")
        for e in stage.menu:
            parts = [f"    entry {e.kind.value}"]
            if e.param is not None:
                parts.append(f"param={_quote(e.param)}")
            parts.append("correct" if e.correct else "wrong")
            if e.mistake_utterance is not None:
                parts.append(_quote(e.mistake_utterance))
            out.append(" ".join(parts))
        for t in stage.transitions:
            if t.guard is None:
                out.append(f"    next {t.target}")
            else:
                out.append(f"    next {t.target} if {_guard_text(t.guard)}")
        out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"


# --- library loading -------------------------------------------------------


def bundled_scenarios_dir() -> Path:
    return Path(__file__).parent / "scenarios"


def load_library(path) -> ScenarioLibrary:
    """Parse and validate every `.retain` file under ``path``.

    Aggregates all failures instead of stopping at the first one; raises
    LibraryError when any file is unparsable or invalid. An empty
    directory yields an empty library with a warning.
    """
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"{root} is not a directory")
    files = sorted(root.glob(f"*{SCENARIO_FILE_SUFFIX}"))
    failures: list[str] = []
    scenarios: list[Scenario] = []
    for f in files:
        try:
            scenario = parse(f.read_text(encoding="utf-8"))
        except ParseError as exc:
            failures.append(f"{f}:{exc.line}:{exc.col}: {exc.message}")
            continue
        scenario.source_path = str(f)
        report = validate_scenario(scenario)
        if not report.ok:
            failures.extend(
                f"{f}:{v.line}: [{v.code}] {v.message}" for v in report.violations)
            continue
        scenarios.append(scenario)

    seen: dict[str, str] = {}
    for sc in scenarios:
        if sc.id in seen:
            failures.append(
                f"{sc.source_path}: duplicate id {sc.id!r} "
                f"(already defined in {seen[sc.id]})")
        else:
            seen[sc.id] = sc.source_path or "<memory>"

    # Drills must leave room for the trainee's own judgment: partial
    # guidance with at least one uncued stage.
    for sc in scenarios:
        if sc.difficulty_tier >= 1:
            if sc.guidance_mode is not GuidanceMode.PARTIAL:
                failures.append(
                    f"{sc.source_path}: [drill-fully-cued] tier "
                    f"{sc.difficulty_tier} scenario must use partial guidance")
            elif all(st.guidance_cue is not None for st in sc.stages.values()):
                failures.append(
                    f"{sc.source_path}: [drill-fully-cued] tier "
                    f"{sc.difficulty_tier} scenario cues every stage")

    if failures:
        raise LibraryError(failures)

    scenarios.sort(key=lambda s: (s.difficulty_tier, s.id))
    warnings = [] if files else [f"no {SCENARIO_FILE_SUFFIX} files in {root}"]
    return ScenarioLibrary(scenarios=scenarios, source_paths=files,
                           warnings=warnings)


def load_bundled_library() -> ScenarioLibrary:
    return load_library(bundled_scenarios_dir())
