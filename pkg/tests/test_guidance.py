"""Doctor cues, mistake utterances and dialogue traversal."""

from __future__ import annotations

import pytest

from neodrill.dsl import load_bundled_library
from neodrill.engine import start_session
from neodrill.guidance import (
    DialogueNode,
    DialogueTree,
    InvalidChoice,
    Speaker,
    mistake_utterance,
    next_cue,
    traverse_dialogue,
)
from neodrill.model import ActionKind, MenuEntry


@pytest.fixture(scope="module")
def library():
    return load_bundled_library()


def state_at(scenario, stage_id):
    state = start_session(scenario, validate=False)
    state.stage_id = stage_id
    return state


class TestNextCue:
    def test_tutorial_names_correct_everywhere(self, library):
        tutorial = library.by_id("tutorial")
        for sid in tutorial.stages:
            cue = next_cue(tutorial, state_at(tutorial, sid))
            assert cue is not None
            assert cue.names_correct_action

    def test_complete_mode_synthesizes_missing_cue(self, library):
        import copy
        from dataclasses import replace

        stripped = copy.deepcopy(library.by_id("tutorial"))
        first = stripped.stages[stripped.initial_stage]
        stripped.stages[first.id] = replace(first, guidance_cue=None)
        cue = next_cue(stripped, state_at(stripped, first.id))
        assert cue is not None
        assert cue.names_correct_action
        assert ActionKind.WARM_DRY_STIMULATE.label in cue.text

    def test_partial_mode_passes_authored_hint(self, library):
        drill = library.by_id("first_breaths")
        cue = next_cue(drill, state_at(drill, "warm"))
        assert cue is not None
        assert cue.text == "Wet and cold. Fix that before anything else."
        assert not cue.names_correct_action

    def test_partial_mode_uncued_stage_returns_none(self, library):
        drill = library.by_id("slowing_heart")
        uncued = [sid for sid, st in drill.stages.items()
                  if st.guidance_cue is None]
        assert uncued
        assert next_cue(drill, state_at(drill, uncued[0])) is None

    def test_every_drill_has_uncued_stage(self, library):
        for sc in library.scenarios:
            if sc.difficulty_tier == 0:
                continue
            states = [state_at(sc, sid) for sid in sc.stages]
            assert any(next_cue(sc, s) is None for s in states), sc.id


class TestMistakeUtterance:
    def test_authored_line_verbatim(self, library):
        drill = library.by_id("first_breaths")
        state = state_at(drill, "warm")
        entry = drill.stages["warm"].menu[1]
        assert entry.mistake_utterance
        assert mistake_utterance(drill, state, entry) == entry.mistake_utterance

    def test_default_template_mentions_kind(self, library):
        drill = library.by_id("first_breaths")
        state = state_at(drill, "warm")
        entry = MenuEntry(ActionKind.CHEST_COMPRESSIONS, correct=False,
                          param="5:1")
        text = mistake_utterance(drill, state, entry)
        assert "chest compressions" in text


def two_level_tree() -> DialogueTree:
    nodes = {
        "root": DialogueNode("root", Speaker.DOCTOR, "Hello.",
                             (("ask", "mid"), ("skip", "end"))),
        "mid": DialogueNode("mid", Speaker.TRAINEE, "Tell me more.",
                            (("go on", "deep"),)),
        "deep": DialogueNode("deep", Speaker.DOCTOR, "The details."),
        "end": DialogueNode("end", Speaker.DOCTOR, "Then we begin."),
    }
    return DialogueTree(root="root", nodes=nodes)


class TestTraverseDialogue:
    def test_empty_path_is_root(self):
        tree = two_level_tree()
        assert traverse_dialogue(tree, []).id == "root"

    def test_two_level_path(self):
        tree = two_level_tree()
        assert traverse_dialogue(tree, [0, 0]).id == "deep"

    def test_out_of_range_reports_depth(self):
        tree = two_level_tree()
        with pytest.raises(InvalidChoice) as exc:
            traverse_dialogue(tree, [0, 5])
        assert exc.value.depth == 1

    def test_terminal_flag(self):
        tree = two_level_tree()
        assert not tree.nodes["root"].terminal
        assert tree.nodes["deep"].terminal

    def test_tutorial_dialogue_walks(self, library):
        tutorial = library.by_id("tutorial")
        assert tutorial.dialogue is not None
        node = traverse_dialogue(tutorial.dialogue, [0])
        assert node.terminal
        assert node.speaker is Speaker.DOCTOR
