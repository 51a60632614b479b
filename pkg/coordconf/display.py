"""Rich terminal output for diagnostics, models, run results and traces."""

from typing import Iterable, Optional

from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table
from rich.text import Text

from coordconf.diagnostics import ParseDiagnostic
from coordconf.dsl.model import ConfiguratorConf
from coordconf.fsm.spec import StatechartSpec
from coordconf.harness.runner import RunResult
from coordconf.harness.trace import TraceKind, TraceRecord

console = Console()

KIND_STYLES = {
    TraceKind.INIT: "blue",
    TraceKind.EVENT: "cyan",
    TraceKind.TRANSITION: "magenta",
    TraceKind.CONF: "yellow",
    TraceKind.MONITOR: "green",
    TraceKind.WRITE: "dim",
    TraceKind.ASSERT: "bold",
}


def display_diagnostics(filename: str, diagnostics: Iterable[ParseDiagnostic]) -> None:
    """Print diagnostics as ``file:line:col: severity: message``, one per line."""
    for diagnostic in diagnostics:
        style = "red" if diagnostic.is_error else "yellow"
        console.print(Text(diagnostic.format(filename), style=style), soft_wrap=True)


def display_conf_summary(conf: ConfiguratorConf) -> None:
    """Display one row per configuration."""
    table = Table(show_header=True, header_style="bold", box=None, padding=(0, 2))
    table.add_column("Configuration")
    table.add_column("Pre")
    table.add_column("Post")
    table.add_column("Changes", justify="right")

    for config_id, config in conf.configurations.items():
        pre = ", ".join(f"{e.subject}:{e.target.value}" for e in config.pre) or "-"
        post = ", ".join(f"{e.subject}:{e.target.value}" for e in config.post) or "-"
        table.add_row(config_id, pre, post, str(len(config.changes)))

    console.print(Panel(table, title="Configurations", border_style="blue"))


def display_chart_summary(spec: StatechartSpec) -> None:
    """Display the state tree of a chart."""
    lines = []

    def walk(state_id: str, depth: int, initial: Optional[str]) -> None:
        state = spec.states[state_id]
        marker = " (initial)" if state_id == initial else ""
        lines.append(f"{'  ' * depth}{state_id}{marker}")
        for child in state.children:
            walk(child, depth + 1, state.initial)

    for top in spec.top:
        walk(top, 0, spec.initial)
    body = escape("\n".join(lines))
    subtitle = f"[dim]{len(spec.transitions)} transitions[/dim]"
    console.print(Panel(body, title=f"Statechart {escape(spec.name)}", subtitle=subtitle, border_style="blue"))


def display_trace(records: Iterable[TraceRecord], kinds: Optional[set[TraceKind]] = None) -> None:
    """Display trace records as a table, optionally filtered by kind."""
    table = Table(show_header=True, header_style="bold", box=None, padding=(0, 2))
    table.add_column("T", justify="right", style="dim")
    table.add_column("Kind")
    table.add_column("Detail", overflow="fold")

    for record in records:
        if kinds and record.kind not in kinds:
            continue
        stamp = record.render().split(" ", 1)[0][2:]
        style = KIND_STYLES.get(record.kind, "")
        table.add_row(stamp, Text(record.kind.value, style=style), Text(record.detail))

    console.print(table)


def display_run_result(result: RunResult) -> None:
    """Display the outcome of a scenario run."""
    table = Table(show_header=False, box=None, padding=(0, 2))
    table.add_column("Key", style="dim")
    table.add_column("Value")

    if result.passed:
        status_text = Text("✅ passed", style="green bold")
    else:
        status_text = Text("❌ failed", style="red bold")
    table.add_row("Result:", status_text)
    table.add_row("Mode:", result.mode.value)
    table.add_row("Trace records:", str(len(result.records)))
    asserts = [r for r in result.records if r.kind is TraceKind.ASSERT]
    table.add_row("Expectations:", f"{sum(r.detail.startswith('pass') for r in asserts)}/{len(asserts)} passed")

    console.print(Panel(table, title="Scenario Run", border_style="blue"))
    for failure in result.failures:
        console.print(Text(f"  {failure}", style="red"), soft_wrap=True)


def print_success(message: str) -> None:
    """Print success message."""
    console.print(f"[green]✅ {escape(message)}[/green]", soft_wrap=True)


def print_error(message: str) -> None:
    """Print error message."""
    console.print(f"[red]❌ {escape(message)}[/red]", soft_wrap=True)


def print_info(message: str) -> None:
    """Print info message."""
    console.print(f"[blue]ℹ️  {escape(message)}[/blue]", soft_wrap=True)
