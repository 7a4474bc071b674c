"""Domain types, structural validation and metric computation."""

from __future__ import annotations

import random
from dataclasses import replace

import pytest

from genlib import gen_scenario
from neodrill.dsl import load_bundled_library
from neodrill.model import (
    PARAM_SPECS,
    TERMINAL_SAVE,
    ActionInstance,
    ActionKind,
    Breathing,
    GuidanceCue,
    GuidanceMode,
    InfantVitals,
    MenuEntry,
    NoSavePath,
    ParamSpec,
    ParamValue,
    Scenario,
    ScenarioMetrics,
    Stage,
    Tone,
    Transition,
    action_vocabulary,
    compute_metrics,
    effective_vitals,
    expand_choices,
    is_correct_choice,
    next_stage_target,
    validate_scenario,
)


@pytest.fixture(scope="module")
def library():
    return load_bundled_library()


def single_stage_scenario(**overrides) -> Scenario:
    stage = Stage(
        id="only",
        prompt="One decision.",
        vitals=InfantVitals(120, Breathing.REGULAR, Tone.ACTIVE, 4),
        menu=(MenuEntry(ActionKind.WARM_DRY_STIMULATE, correct=True),),
        transitions=(Transition(TERMINAL_SAVE),),
    )
    base = dict(
        id="mini", title="Mini", difficulty_tier=1, initial_stage="only",
        stages={"only": stage}, guidance_mode=GuidanceMode.PARTIAL,
    )
    base.update(overrides)
    return Scenario(**base)


class TestVocabulary:
    def test_exactly_nine_kinds(self):
        assert len(ActionKind) == 9

    def test_parameterized_kinds_have_specs(self):
        for kind in ActionKind:
            if kind.parameterized:
                assert len(PARAM_SPECS[kind].values) >= 2

    def test_bundled_vocabulary_is_all_nine(self, library):
        assert action_vocabulary(library) == set(ActionKind)

    def test_union_semantics(self):
        rng = random.Random(5)
        a = gen_scenario(rng, max_stages=2)
        b = gen_scenario(rng, max_stages=2)

        class FakeLibrary:
            scenarios = [a, b]

        kinds_a = {e.kind for s in a.stages.values() for e in s.menu}
        kinds_b = {e.kind for s in b.stages.values() for e in s.menu}
        assert action_vocabulary(FakeLibrary()) == kinds_a | kinds_b

    def test_empty_library_rejected(self):
        class Empty:
            scenarios = []

        with pytest.raises(ValueError):
            action_vocabulary(Empty())


class TestTypeInvariants:
    def test_param_spec_needs_two_values(self):
        with pytest.raises(ValueError):
            ParamSpec(ActionKind.CHEST_COMPRESSIONS,
                      (ParamValue("3:1", "only"),))

    def test_param_spec_unique_labels(self):
        with pytest.raises(ValueError):
            ParamSpec(ActionKind.CHEST_COMPRESSIONS,
                      (ParamValue("3:1", "x"), ParamValue("5:1", "x")))

    def test_action_instance_param_iff_parameterized(self):
        ActionInstance(ActionKind.CHEST_COMPRESSIONS, "3:1")
        ActionInstance(ActionKind.SUCTION_AIRWAY)
        with pytest.raises(ValueError):
            ActionInstance(ActionKind.SUCTION_AIRWAY, "3:1")
        with pytest.raises(ValueError):
            ActionInstance(ActionKind.CHEST_COMPRESSIONS)
        with pytest.raises(ValueError):
            ActionInstance(ActionKind.CHEST_COMPRESSIONS, "9:9")

    def test_vitals_ranges(self):
        with pytest.raises(ValueError):
            InfantVitals(-1, Breathing.REGULAR, Tone.ACTIVE, 4)
        with pytest.raises(ValueError):
            InfantVitals(100, Breathing.REGULAR, Tone.ACTIVE, 5)

    def test_cue_text_nonempty(self):
        with pytest.raises(ValueError):
            GuidanceCue("")

    def test_metrics_bounds(self):
        with pytest.raises(ValueError):
            ScenarioMetrics(0, 1)
        with pytest.raises(ValueError):
            ScenarioMetrics(3, 4)
        with pytest.raises(ValueError):
            ScenarioMetrics(15, 10)  # only 9 kinds exist


class TestValidate:
    def test_bundled_scenarios_clean(self, library):
        for sc in library.scenarios:
            report = validate_scenario(sc)
            assert report.ok, report.summary()

    def test_dangling_transition(self):
        sc = single_stage_scenario()
        stage = sc.stages["only"]
        sc.stages["only"] = replace(
            stage, transitions=(Transition("nowhere"), Transition(TERMINAL_SAVE)))
        codes = {v.code for v in validate_scenario(sc).violations}
        assert "dangling-transition" in codes

    def test_tutorial_guidance_incomplete(self):
        sc = single_stage_scenario(difficulty_tier=0,
                                   guidance_mode=GuidanceMode.COMPLETE)
        codes = {v.code for v in validate_scenario(sc).violations}
        assert "tutorial-guidance-incomplete" in codes

    def test_no_correct_entry(self):
        sc = single_stage_scenario()
        stage = sc.stages["only"]
        sc.stages["only"] = replace(
            stage, menu=(MenuEntry(ActionKind.SUCTION_AIRWAY, correct=False),))
        codes = {v.code for v in validate_scenario(sc).violations}
        assert "no-correct-entry" in codes

    def test_unreachable_stage_and_cycle(self):
        reachable = Stage(
            id="a", prompt="p",
            vitals=InfantVitals(100, Breathing.REGULAR, Tone.ACTIVE, 4),
            menu=(MenuEntry(ActionKind.SUCTION_AIRWAY, correct=True),),
            transitions=(Transition(TERMINAL_SAVE),))
        orphan = replace(reachable, id="b")
        sc = single_stage_scenario()
        sc.stages = {"a": reachable, "b": orphan}
        sc.initial_stage = "a"
        codes = {v.code for v in validate_scenario(sc).violations}
        assert "unreachable-stage" in codes

        looping = replace(reachable, transitions=(Transition("a"),))
        sc2 = single_stage_scenario()
        sc2.stages = {"a": looping}
        sc2.initial_stage = "a"
        codes = {v.code for v in validate_scenario(sc2).violations}
        assert "cycle" in codes
        assert "save-unreachable" in codes

    def test_metrics_mismatch(self):
        sc = single_stage_scenario(declared_metrics=ScenarioMetrics(2, 1))
        codes = {v.code for v in validate_scenario(sc).violations}
        assert "metrics-mismatch" in codes

    def test_missing_guarded_fallback(self):
        sc = single_stage_scenario()
        stage = sc.stages["only"]
        from neodrill.model import Comparison, Guard, GuardOp
        guard = Guard((Comparison("heart_rate", GuardOp.LT, 60),))
        sc.stages["only"] = replace(
            stage, transitions=(Transition(TERMINAL_SAVE, guard),))
        codes = {v.code for v in validate_scenario(sc).violations}
        assert "no-unconditional-transition" in codes

    def test_generated_scenarios_validate_and_compute(self):
        rng = random.Random(99)
        for _ in range(100):
            sc = gen_scenario(rng)
            report = validate_scenario(sc)
            assert report.ok, report.summary()
            metrics = compute_metrics(sc)
            assert metrics.optimal_path_length >= 1


def brute_force_metrics(scenario: Scenario, depth_cap: int = 16):
    """Independent oracle: enumerate every zero-mistake action path."""
    best: list[tuple[int, int]] = []

    def dfs(sid: str, kinds: frozenset, length: int) -> None:
        if length > depth_cap:
            raise RuntimeError("depth cap exceeded")
        if sid == TERMINAL_SAVE:
            best.append((length, len(kinds)))
            return
        stage = scenario.stages[sid]
        target = next_stage_target(
            stage, effective_vitals(stage.vitals, 4))
        if target is None:
            return
        for action in expand_choices(stage):
            if is_correct_choice(stage, action):
                dfs(target, kinds | {action.kind}, length + 1)

    dfs(scenario.initial_stage, frozenset(), 0)
    if not best:
        raise NoSavePath("brute force found no completion")
    return min(best)


class TestComputeMetrics:
    def test_bundled_drill_values(self, library):
        by_tier = {sc.difficulty_tier: sc for sc in library.scenarios}
        assert compute_metrics(by_tier[1]) == ScenarioMetrics(6, 5)
        assert compute_metrics(by_tier[2]) == ScenarioMetrics(9, 7)
        assert compute_metrics(by_tier[3]) == ScenarioMetrics(13, 9)

    def test_tutorial_computed_row(self, library):
        tutorial = library.by_id("tutorial")
        length, distinct = brute_force_metrics(tutorial)
        assert compute_metrics(tutorial) == ScenarioMetrics(length, distinct)

    def test_single_stage(self):
        assert compute_metrics(single_stage_scenario()) == ScenarioMetrics(1, 1)

    def test_no_save_path(self):
        sc = single_stage_scenario()
        stage = sc.stages["only"]
        sc.stages["only"] = replace(
            stage, menu=(MenuEntry(ActionKind.SUCTION_AIRWAY, correct=False),))
        with pytest.raises(NoSavePath):
            compute_metrics(sc)

    def test_matches_brute_force_on_small_scenarios(self):
        rng = random.Random(1234)
        for _ in range(200):
            sc = gen_scenario(rng, max_stages=6)
            got = compute_metrics(sc)
            length, distinct = brute_force_metrics(sc)
            assert (got.optimal_path_length, got.distinct_actions) == \
                (length, distinct), sc.id

    def test_declared_equals_computed_for_accepted(self, library):
        for sc in library.scenarios:
            assert sc.declared_metrics == compute_metrics(sc)
