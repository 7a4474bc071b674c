"""AI-doctor guidance: stage cues, mistake utterances and dialogue trees.

Everything here is stateless over immutable inputs. The doctor speaks in
two registers: a per-stage cue shown before the decision (complete mode
always names the correct action, partial mode only relays the authored
hint) and an utterance after every mistake.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Optional

from .model import GuidanceCue, GuidanceMode

if TYPE_CHECKING:
    from .engine import SessionState
    from .model import MenuEntry, Scenario

#: Used when a wrong entry carries no authored doctor line.
DEFAULT_MISTAKE_TEMPLATE = "Not {kind} - check the algorithm."


class GuidanceError(Exception):
    pass


class InvalidChoice(GuidanceError):
    """A dialogue path index was out of range; ``depth`` is 0-based."""

    def __init__(self, depth: int, message: str):
        super().__init__(message)
        self.depth = depth


class Speaker(str, Enum):
    DOCTOR = "doctor"
    TRAINEE = "trainee"


@dataclass(frozen=True)
class DialogueNode:
    id: str
    speaker: Speaker
    text: str
    children: tuple[tuple[str, str], ...] = ()  # (choice label, child node id)

    @property
    def terminal(self) -> bool:
        return not self.children


@dataclass
class DialogueTree:
    root: str
    nodes: dict[str, DialogueNode]


def traverse_dialogue(tree: DialogueTree, path: list[int]) -> DialogueNode:
    """Follow child choices from the root; empty path returns the root."""
    node = tree.nodes[tree.root]
    for depth, index in enumerate(path):
        if not 0 <= index < len(node.children):
            raise InvalidChoice(
                depth,
                f"choice {index} out of range at depth {depth} "
                f"(node {node.id!r} has {len(node.children)} choices)",
            )
        node = tree.nodes[node.children[index][1]]
    return node


def _synthesized_cue(scenario: "Scenario", stage_id: str) -> GuidanceCue:
    stage = scenario.stages[stage_id]
    entry = next(iter(stage.correct_entries()))
    if entry.param is not None:
        text = f"Now: {entry.kind.label} at {entry.param}."
    else:
        text = f"Now: {entry.kind.label}."
    return GuidanceCue(text=text, names_correct_action=True)


def next_cue(scenario: "Scenario", state: "SessionState") -> Optional[GuidanceCue]:
    """The doctor's cue for the current stage, or None when the trainee
    is on their own.

    Complete mode always yields a cue naming the correct action: the
    authored cue when it names one, a synthesized line otherwise.
    """
    stage = scenario.stages[state.stage_id]
    cue = stage.guidance_cue
    if scenario.guidance_mode is GuidanceMode.COMPLETE:
        if cue is not None and cue.names_correct_action:
            return cue
        return _synthesized_cue(scenario, stage.id)
    return cue


def mistake_utterance(scenario: "Scenario", state: "SessionState",
                      entry: "MenuEntry") -> str:
    """Doctor line after a mistake: the authored one, else the template."""
    if entry.mistake_utterance:
        return entry.mistake_utterance
    return DEFAULT_MISTAKE_TEMPLATE.format(kind=entry.kind.label)
