"""Event bus, scenario scripts, traces and the scenario runner."""

from coordconf.harness.bus import EventBus
from coordconf.harness.runner import (
    DeterministicRunner,
    RunMode,
    RunResult,
    ScenarioInputs,
    ThreadedRunner,
    load_inputs,
    run_scenario,
)
from coordconf.harness.scenario import Directive, DirectiveKind, ExpectKind, ScenarioScript, load_scenario, parse_scenario
from coordconf.harness.trace import TraceKind, TraceRecord, Tracer, compare_traces, load_trace, parse_trace, render_trace

__all__ = [
    "DeterministicRunner",
    "Directive",
    "DirectiveKind",
    "EventBus",
    "ExpectKind",
    "RunMode",
    "RunResult",
    "ScenarioInputs",
    "ScenarioScript",
    "ThreadedRunner",
    "TraceKind",
    "TraceRecord",
    "Tracer",
    "compare_traces",
    "load_inputs",
    "load_scenario",
    "load_trace",
    "parse_scenario",
    "parse_trace",
    "render_trace",
    "run_scenario",
]
