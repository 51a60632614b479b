"""CLI commands for coordconf."""

from pathlib import Path
from typing import Optional

import typer
from rich.console import Console

from coordconf import __version__
from coordconf.config import Config, load_config, setup_logging
from coordconf.diagnostics import ParseDiagnostic, has_errors
from coordconf.display import (
    display_chart_summary,
    display_conf_summary,
    display_diagnostics,
    display_run_result,
    display_trace,
    print_error,
    print_info,
    print_success,
)
from coordconf.dsl.parser import parse_configurator_conf
from coordconf.dsl.printer import format_conf
from coordconf.dsl.validate import validate
from coordconf.errors import ModelFileError
from coordconf.fsm.parser import parse_statechart
from coordconf.harness.runner import RunMode, load_inputs, run_scenario
from coordconf.harness.scenario import parse_scenario
from coordconf.harness.trace import TraceKind, compare_traces, load_trace, render_trace
from coordconf.runtime.sysmodel import SystemModel, parse_system_model

app = typer.Typer(
    name="coordconf",
    help="Coordinator/Configurator runtime: check models, run scenarios, inspect traces.",
    add_completion=False,
)

console = Console()

EXISTING_FILE = dict(exists=True, dir_okay=False, readable=True)


@app.callback()
def main(
    ctx: typer.Context,
    config_file: Optional[Path] = typer.Option(
        None, "--config", "-c", help="Runtime configuration file (YAML)", **EXISTING_FILE
    ),
):
    """Load the runtime configuration and set up logging."""
    config = load_config(config_file)
    setup_logging(config)
    ctx.obj = config


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        print_error(f"Cannot read {path}: {e}")
        raise typer.Exit(1)


def _report(path: Path, diagnostics: list[ParseDiagnostic]) -> bool:
    """Print diagnostics for one file. Returns True when there are no errors."""
    display_diagnostics(str(path), diagnostics)
    return not has_errors(diagnostics)


@app.command()
def check(
    conf: Optional[Path] = typer.Option(None, "--conf", help="Configurator DSL file (.conf)", **EXISTING_FILE),
    system: Optional[Path] = typer.Option(None, "--system", help="System model file (.sys)", **EXISTING_FILE),
    fsm: Optional[Path] = typer.Option(None, "--fsm", help="Statechart file (.fsm)", **EXISTING_FILE),
    scenario: Optional[Path] = typer.Option(None, "--scenario", help="Scenario script", **EXISTING_FILE),
    summary: bool = typer.Option(False, "--summary", "-s", help="Show what the files declare"),
):
    """Parse and validate model files and print diagnostics."""
    if not any((conf, system, fsm, scenario)):
        raise typer.BadParameter("give at least one of --conf, --system, --fsm, --scenario")

    ok = True
    model: Optional[SystemModel] = None
    if system is not None:
        model, diagnostics = parse_system_model(_read(system))
        ok &= _report(system, diagnostics)
        if has_errors(diagnostics):
            model = None

    if conf is not None:
        parsed, diagnostics = parse_configurator_conf(_read(conf))
        if parsed is not None:
            diagnostics = diagnostics + validate(parsed, model)
        ok &= _report(conf, diagnostics)
        if parsed is not None and summary:
            display_conf_summary(parsed)

    if fsm is not None:
        spec, diagnostics = parse_statechart(_read(fsm))
        ok &= _report(fsm, diagnostics)
        if spec is not None and summary:
            display_chart_summary(spec)

    if scenario is not None:
        _, diagnostics = parse_scenario(_read(scenario))
        ok &= _report(scenario, diagnostics)

    if not ok:
        print_error("Validation failed")
        raise typer.Exit(1)
    print_success("All files valid")


@app.command()
def run(
    ctx: typer.Context,
    system: Path = typer.Option(..., "--system", help="System model file (.sys)", **EXISTING_FILE),
    conf: Path = typer.Option(..., "--conf", help="Configurator DSL file (.conf)", **EXISTING_FILE),
    fsm: Path = typer.Option(..., "--fsm", help="Statechart file (.fsm)", **EXISTING_FILE),
    scenario: Optional[Path] = typer.Option(None, "--scenario", help="Scenario script", **EXISTING_FILE),
    mode: RunMode = typer.Option(RunMode.DETERMINISTIC, "--mode", "-m", help="det or threaded"),
    trace_out: Optional[Path] = typer.Option(None, "--trace-out", "-o", help="Write the trace to this file"),
    quiet: bool = typer.Option(False, "--quiet", "-q", help="Do not print the trace"),
):
    """Run a scenario against the model files."""
    config: Config = ctx.obj or Config()
    try:
        inputs = load_inputs(system, conf, fsm, scenario)
    except ModelFileError as e:
        print_error(str(e))
        display_diagnostics(e.path or "-", e.diagnostics)
        raise typer.Exit(1)

    result = run_scenario(inputs, mode, config)

    target = trace_out or (Path(config.harness.trace_out) if config.harness.trace_out else None)
    if target is not None:
        target.write_text(result.render_trace(), encoding="utf-8")
        print_info(f"Trace written to {target}")
    if not quiet:
        display_trace(result.records)
    display_run_result(result)
    raise typer.Exit(result.exit_code)


@app.command()
def fmt(
    conf: Path = typer.Option(..., "--conf", help="Configurator DSL file (.conf)", **EXISTING_FILE),
    write: bool = typer.Option(False, "--write", "-w", help="Rewrite the file in place"),
):
    """Print a .conf file in canonical form."""
    parsed, diagnostics = parse_configurator_conf(_read(conf))
    if parsed is None:
        display_diagnostics(str(conf), diagnostics)
        raise typer.Exit(1)

    text = format_conf(parsed)
    if write:
        conf.write_text(text, encoding="utf-8")
        print_success(f"Formatted {conf}")
    else:
        typer.echo(text, nl=False)


@app.command()
def trace(
    trace_file: Path = typer.Argument(..., help="Saved trace file", **EXISTING_FILE),
    against: Optional[Path] = typer.Option(None, "--against", help="Golden trace to compare with", **EXISTING_FILE),
    kind: Optional[list[TraceKind]] = typer.Option(None, "--kind", "-k", help="Only show records of this kind"),
    plain: bool = typer.Option(False, "--plain", help="Print raw trace lines"),
):
    """Re-render a saved trace, or compare it with a golden trace."""
    try:
        records = load_trace(trace_file)
        expected = load_trace(against) if against is not None else None
    except ValueError as e:
        print_error(str(e))
        raise typer.Exit(1)

    if expected is not None:
        differences = compare_traces(records, expected)
        if differences:
            for line in differences:
                print_error(line)
            raise typer.Exit(1)
        print_success(f"Trace matches {against} ({len(records)} records)")
        return

    kinds = set(kind) if kind else None
    if plain:
        typer.echo(render_trace(r for r in records if not kinds or r.kind in kinds), nl=False)
    else:
        display_trace(records, kinds)


@app.command()
def version():
    """Show version information."""
    console.print(f"coordconf v{__version__}")


if __name__ == "__main__":
    app()
