"""Operator and author tooling.

Exit codes: 0 success, 1 domain failure (invalid scenario, lost replay,
...), 2 usage or I/O errors.
"""

from __future__ import annotations

import json
import secrets
import sys
import time
from pathlib import Path

import click

from . import analytics, engine
from .dsl import (
    SCENARIO_FILE_SUFFIX,
    LibraryError,
    ParseError,
    ScenarioLibrary,
    bundled_scenarios_dir,
    load_library,
    parse,
)
from .engine import ActionInstance, Outcome, SessionConfig
from .guidance import next_cue
from .model import (
    PARAM_SPECS,
    compute_metrics,
    validate_scenario,
)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2

_library_option = click.option(
    "--library", "library_path", envvar="NEODRILL_LIBRARY",
    default=None, metavar="DIR",
    help="Scenario directory (defaults to the bundled library).")

_format_option = click.option(
    "--format", "fmt", type=click.Choice(["text", "structured"]),
    default="text", show_default=True,
    help="Plain text or machine-readable JSON output.")


def _resolve_library(library_path: str | None) -> ScenarioLibrary:
    path = Path(library_path) if library_path else bundled_scenarios_dir()
    if not path.is_dir():
        click.echo(f"error: library directory not found: {path}", err=True)
        sys.exit(EXIT_USAGE)
    try:
        library = load_library(path)
    except LibraryError as exc:
        for failure in exc.failures:
            click.echo(failure, err=True)
        sys.exit(EXIT_DOMAIN)
    for warning in library.warnings:
        click.echo(f"warning: {warning}", err=True)
    return library


def _require_scenario(library: ScenarioLibrary, scenario_id: str):
    scenario = library.by_id(scenario_id)
    if scenario is None:
        known = ", ".join(sc.id for sc in library.scenarios) or "(none)"
        click.echo(f"error: no scenario {scenario_id!r}; known: {known}",
                   err=True)
        sys.exit(EXIT_DOMAIN)
    return scenario


@click.group()
def main() -> None:
    """Author, validate, play and serve resuscitation decision drills."""


@main.command()
@click.argument("paths", nargs=-1, required=True)
def validate(paths: tuple[str, ...]) -> None:
    """Parse and validate scenario files (or directories of them)."""
    files: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            files.extend(sorted(p.glob(f"*{SCENARIO_FILE_SUFFIX}")))
        elif p.is_file():
            files.append(p)
        else:
            click.echo(f"{raw}: not found", err=True)
            sys.exit(EXIT_USAGE)
    failed = False
    for f in files:
        try:
            scenario = parse(f.read_text(encoding="utf-8"))
        except ParseError as exc:
            click.echo(f"{f}:{exc.line}:{exc.col}: {exc.message}")
            failed = True
            continue
        report = validate_scenario(scenario)
        if report.ok:
            click.echo(f"{f}: OK ({scenario.id})")
        else:
            failed = True
            for v in report.violations:
                click.echo(f"{f}:{v.line}: [{v.code}] {v.message}")
    sys.exit(EXIT_DOMAIN if failed else EXIT_OK)


@main.command()
@_library_option
@_format_option
@click.option("--budget", default=analytics.DEFAULT_NODE_BUDGET,
              show_default=True,
              help="Node budget for the exact survival enumeration.")
def metrics(library_path: str | None, fmt: str, budget: int) -> None:
    """Print path length, action variety and random-policy survival."""
    library = _resolve_library(library_path)
    rows = []
    for sc in library.scenarios:
        m = compute_metrics(sc)
        try:
            survival = analytics.exact_survival(sc, node_budget=budget)
            p: float | None = survival.probability
        except analytics.BudgetExceeded:
            p = None
        rows.append({
            "id": sc.id,
            "tier": sc.difficulty_tier,
            "optimal_path_length": m.optimal_path_length,
            "distinct_actions": m.distinct_actions,
            "random_policy_survival": p,
        })
    if fmt == "structured":
        click.echo(json.dumps(rows, indent=2))
        return
    click.echo(f"{'tier':>4}  {'id':<20}{'actions':>8}{'distinct':>9}"
               f"{'survival':>10}")
    for r in rows:
        p = r["random_policy_survival"]
        survival_text = "-" if p is None else f"{p:.4f}"
        click.echo(f"{r['tier']:>4}  {r['id']:<20}"
                   f"{r['optimal_path_length']:>8}{r['distinct_actions']:>9}"
                   f"{survival_text:>10}")


def _print_stage(state) -> None:
    scenario = state.scenario
    stage = scenario.stages[state.stage_id]
    vitals = engine.current_vitals(state)
    click.echo("")
    click.echo(stage.prompt)
    click.echo(f"  HR {vitals.heart_rate} | breathing {vitals.breathing.value}"
               f" | tone {vitals.tone.value} | health {vitals.health}/4")
    cue = next_cue(scenario, state)
    if cue is not None:
        click.echo(f'  doctor: "{cue.text}"')
    for i, kind in enumerate(stage.menu_kinds(), start=1):
        click.echo(f"  {i}. {kind.label}")


def _read_choice(prompt: str, limit: int) -> int | None:
    """Read a 1..limit menu number; None on EOF; reprompts otherwise."""
    while True:
        try:
            raw = input(prompt)
        except EOFError:
            return None
        raw = raw.strip()
        if raw.isdigit() and 1 <= int(raw) <= limit:
            return int(raw)
        click.echo(f"  pick a number between 1 and {limit}")


@main.command()
@_library_option
@click.option("--scenario", "scenario_id", required=True, metavar="ID")
@click.option("--seed", default=0, show_default=True)
@click.option("--max-mistakes", default=4, show_default=True)
@click.option("--log-dir", default="session_logs", show_default=True,
              envvar="NEODRILL_LOG_DIR")
@click.option("--log-file", default=None,
              help="Exact log path (overrides --log-dir).")
def play(library_path: str | None, scenario_id: str, seed: int,
         max_mistakes: int, log_dir: str, log_file: str | None) -> None:
    """Play a scenario interactively on stdin/stdout."""
    library = _resolve_library(library_path)
    scenario = _require_scenario(library, scenario_id)
    config = SessionConfig(max_mistakes=max_mistakes, seed=seed)
    state = engine.start_session(scenario, config, validate=False)
    click.echo(f"=== {scenario.title} (tier {scenario.difficulty_tier}) ===")

    while state.outcome is Outcome.ONGOING:
        _print_stage(state)
        stage = scenario.stages[state.stage_id]
        kinds = stage.menu_kinds()
        choice = _read_choice("> ", len(kinds))
        if choice is None:
            engine.mark_abandoned(state)
            break
        kind = kinds[choice - 1]
        param = None
        spec = PARAM_SPECS.get(kind)
        if spec is not None:
            for i, value in enumerate(spec.allowed_values, start=1):
                click.echo(f"    {i}. {value.value} ({value.label})")
            sub = _read_choice("  value> ", len(spec.allowed_values))
            if sub is None:
                engine.mark_abandoned(state)
                break
            param = spec.allowed_values[sub - 1].value
        state, event = engine.apply_action(state, ActionInstance(kind, param))
        if event.audio_cue:
            click.echo(f'  [bell] doctor: "{event.utterance}"')
        elif event.utterance:
            click.echo(f'  doctor: "{event.utterance}"')
        else:
            click.echo("  correct.")

    if state.log.abandoned:
        click.echo("\nABANDONED")
    elif state.outcome is Outcome.SAVED:
        click.echo(f"\nSAVED with {state.mistakes} mistake(s)")
    else:
        click.echo(f"\nDIED after {state.mistakes} mistakes")

    if log_file is not None:
        path = Path(log_file)
    else:
        name = f"{scenario.id}-{int(time.time() * 1000)}-{secrets.token_hex(4)}.jsonl"
        path = Path(log_dir) / name
    analytics.write_log(state.log, path)
    click.echo(f"log: {path}")


@main.command()
@_library_option
@click.option("--scenario", "scenario_id", required=True, metavar="ID")
@click.option("--trials", default=10000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@_format_option
def simulate(library_path: str | None, scenario_id: str, trials: int,
             seed: int, fmt: str) -> None:
    """Monte-Carlo survival of a uniformly random trainee."""
    library = _resolve_library(library_path)
    scenario = _require_scenario(library, scenario_id)
    est = analytics.estimate_difficulty(scenario, trials=trials, seed=seed)
    if fmt == "structured":
        click.echo(json.dumps({
            "scenario_id": scenario.id,
            "trials": est.trials,
            "seed": seed,
            "probability": est.probability,
            "standard_error": est.standard_error,
        }, indent=2))
    else:
        click.echo(f"{scenario.id}: survival {est.probability:.4f} "
                   f"(se {est.standard_error:.4f}, {trials} trials, seed {seed})")


@main.command()
@click.argument("logfile")
@_library_option
@_format_option
def debrief(logfile: str, library_path: str | None, fmt: str) -> None:
    """Render the debrief report for a finished session log."""
    path = Path(logfile)
    if not path.is_file():
        click.echo(f"{logfile}: not found", err=True)
        sys.exit(EXIT_USAGE)
    library = _resolve_library(library_path)
    try:
        log = analytics.read_log(path)
    except analytics.LogFormatError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_DOMAIN)
    scenario = _require_scenario(library, log.header.scenario_id)
    try:
        report = analytics.debrief_report(log, scenario)
    except engine.ReplayDivergence as exc:
        click.echo(f"error: log does not replay: {exc}", err=True)
        sys.exit(EXIT_DOMAIN)
    if fmt == "structured":
        click.echo(json.dumps(report.to_dict(), indent=2))
    else:
        click.echo(report.render_text(), nl=False)


@main.command()
@_library_option
@click.option("--port", default=8000, show_default=True, envvar="NEODRILL_PORT")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ttl-minutes", default=60.0, show_default=True,
              envvar="NEODRILL_TTL_MINUTES")
@click.option("--log-dir", default="session_logs", show_default=True,
              envvar="NEODRILL_LOG_DIR")
@click.option("--ui-dir", default=None, envvar="NEODRILL_UI_DIR",
              help="Static directory to serve at / (the browser client).")
def serve(library_path: str | None, port: int, host: str, ttl_minutes: float,
          log_dir: str, ui_dir: str | None) -> None:
    """Run the HTTP session service."""
    import uvicorn

    from .service import create_app

    library = _resolve_library(library_path)
    if ui_dir is not None and not Path(ui_dir).is_dir():
        click.echo(f"error: --ui-dir not found: {ui_dir}", err=True)
        sys.exit(EXIT_USAGE)
    app = create_app(library, log_dir=log_dir, ttl_minutes=ttl_minutes,
                     ui_dir=ui_dir)
    click.echo(f"serving {len(library.scenarios)} scenario(s) "
               f"on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
