"""Scenario-driven neonatal resuscitation decision trainer."""

from .dsl import ScenarioLibrary, load_bundled_library, load_library, parse, serialize
from .engine import SessionConfig, apply_action, legal_actions, replay, start_session
from .model import (
    ActionInstance,
    ActionKind,
    Scenario,
    action_vocabulary,
    compute_metrics,
    validate_scenario,
)

__all__ = [
    "ActionInstance",
    "ActionKind",
    "Scenario",
    "ScenarioLibrary",
    "SessionConfig",
    "action_vocabulary",
    "apply_action",
    "compute_metrics",
    "legal_actions",
    "load_bundled_library",
    "load_library",
    "parse",
    "replay",
    "serialize",
    "start_session",
    "validate_scenario",
]
