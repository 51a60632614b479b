"""Scenario runner binding registry, monitors, coordinator and configurator.

Two modes:

``det``
    One thread, logical milliseconds. At each directive time the runner
    injects events, then repeats rounds until nothing is left to do. A
    round delivers finished configurations, evaluates monitors (when the
    registry may have changed), steps the statechart on every pending
    event and applies at most one queued configuration. Expectations are
    checked once the instant is quiet. Between directives time jumps to
    the next timer expiry or configuration completion. A blocking
    operation takes no wall time: its duration delays the status event
    and keeps the configurator busy in logical time.

``threaded``
    Coordinator, configurator and event bus each run in their own
    thread, connected by bounded queues, with real timers. A watchdog
    stops the run when the coordinator loop stops making progress.
"""

import logging
import queue
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from coordconf.config import Config
from coordconf.configurator import ApplyReport, ConfiguratorEngine
from coordconf.dsl.model import ConfiguratorConf
from coordconf.dsl.parser import load_configurator_conf
from coordconf.dsl.validate import validate
from coordconf.diagnostics import has_errors
from coordconf.errors import CoordConfError, ModelFileError, MonitorError
from coordconf.events import Event
from coordconf.fsm.machine import StepResult, Statechart
from coordconf.fsm.parser import load_statechart
from coordconf.fsm.spec import StatechartSpec
from coordconf.harness.bus import EventBus
from coordconf.harness.scenario import Directive, DirectiveKind, ExpectKind, ScenarioScript, load_scenario
from coordconf.harness.trace import TraceKind, TraceRecord, Tracer, render_trace, wall_clock
from coordconf.monitors import Monitor, RegistryView
from coordconf.runtime.registry import ComponentRegistry
from coordconf.runtime.sysmodel import SystemModel, build_registry, load_system_model
from coordconf.values import format_value, values_match

logger = logging.getLogger(__name__)


class RunMode(str, Enum):
    DETERMINISTIC = "det"
    THREADED = "threaded"


@dataclass
class ScenarioInputs:
    model: SystemModel
    conf: ConfiguratorConf
    spec: StatechartSpec
    script: ScenarioScript


@dataclass
class RunResult:
    mode: RunMode
    records: list[TraceRecord] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def render_trace(self) -> str:
        return render_trace(self.records)


def load_inputs(
    system: Union[str, Path],
    conf: Union[str, Path],
    fsm: Union[str, Path],
    scenario: Optional[Union[str, Path]] = None,
) -> ScenarioInputs:
    """Load and validate every input file of a run.

    Raises:
        ModelFileError: If a file does not parse, or the configurations do
            not validate against the system model
    """
    model = load_system_model(Path(system))
    configurations = load_configurator_conf(conf)
    diagnostics = validate(configurations, model)
    if has_errors(diagnostics):
        raise ModelFileError(f"Invalid configuration file: {conf}", diagnostics, str(conf))
    spec = load_statechart(fsm)
    script = load_scenario(scenario) if scenario is not None else ScenarioScript()
    return ScenarioInputs(model, configurations, spec, script)


def conf_detail(report: ApplyReport) -> str:
    """Detail of a CONF trace line."""
    return (
        f"{report.config_id} {report.outcome.value} phase={report.phase.value} "
        f"detail={report.detail or '-'}"
    )


def transition_detail(result: StepResult) -> str:
    return f"{result.source_path} -> {result.target_path} on {result.event.name}"


def check_expectation(
    directive: Directive, active_path: str, registry: ComponentRegistry, seen: set[str]
) -> Optional[str]:
    """Return a failure description, or None when the expectation holds."""
    expect = directive.expect
    try:
        if expect is ExpectKind.FSM:
            actual = active_path
            ok = actual == directive.subject
        elif expect is ExpectKind.LIFECYCLE:
            state = registry.lifecycle_of(directive.subject)
            actual = state.value
            ok = state is directive.state
        elif expect in (ExpectKind.PROP, ExpectKind.PORT):
            if expect is ExpectKind.PROP:
                value = registry.property_value(directive.subject)
            else:
                value = registry.port_value(directive.subject)
            actual = "<absent>" if value is None else format_value(value)
            ok = value is not None and values_match(directive.value, value)
        elif expect is ExpectKind.EVENT:
            ok = directive.subject in seen
            actual = "not raised"
        else:
            ok = directive.subject not in seen
            actual = "raised"
    except CoordConfError as e:
        return f"{directive}: {e}"
    return None if ok else f"{directive}: actual {actual}"


class DeterministicRunner:
    """Single-threaded run in logical milliseconds."""

    def __init__(self, inputs: ScenarioInputs, config: Optional[Config] = None):
        config = config or Config()
        self.inputs = inputs
        self.max_rounds = config.harness.max_rounds_per_instant
        self.now = 0
        self.tracer = Tracer(clock=lambda: self.now)
        self.failures: list[str] = []
        self.registry = build_registry(inputs.model, sleep=self._logical_sleep)
        self.engine = ConfiguratorEngine(
            inputs.conf,
            self.registry,
            config.engine,
            types=inputs.model.types,
            emit=self._on_status,
            on_report=self._on_report,
        )
        self.chart = Statechart(inputs.spec)
        self.monitors = [Monitor(spec) for spec in inputs.model.monitors]
        self.view = RegistryView(self.registry)
        self.pending: list[Event] = []
        self.seen: set[str] = set()
        self._blocked_ms = 0.0
        self._busy_until = 0
        self._deferred: list[tuple[int, int, object]] = []
        self._sequence = 0

    def _logical_sleep(self, seconds: float) -> None:
        self._blocked_ms += seconds * 1000.0

    def _defer(self, item: object) -> bool:
        """Hold an engine output until the blocked time has elapsed."""
        ready = self.now + int(round(self._blocked_ms))
        if ready <= self.now:
            return False
        self._sequence += 1
        self._deferred.append((ready, self._sequence, item))
        return True

    def _on_report(self, report: ApplyReport) -> None:
        if not self._defer(report):
            self.tracer.record(TraceKind.CONF, conf_detail(report))

    def _on_status(self, event: Event) -> None:
        if not self._defer(event):
            self.pending.append(event)

    def _deliver_due(self) -> bool:
        due = sorted(item for item in self._deferred if item[0] <= self.now)
        if not due:
            return False
        self._deferred = [item for item in self._deferred if item[0] > self.now]
        for _, _, item in due:
            if isinstance(item, ApplyReport):
                self.tracer.record(TraceKind.CONF, conf_detail(item))
            else:
                self.pending.append(item)
        return True

    def _evaluate_monitors(self) -> None:
        for monitor in self.monitors:
            try:
                event = monitor.evaluate(self.view)
            except MonitorError as e:
                logger.warning(f"Monitor {monitor.spec.id}: {e}")
                continue
            if event is not None:
                self.tracer.record(TraceKind.MONITOR, f"{monitor.spec.id} {event.name}")
                self.pending.append(event)

    def _dispatch(self, event: Event) -> None:
        self.tracer.record(TraceKind.EVENT, str(event))
        self.seen.add(event.name)
        self.engine.on_event(event)
        result = self.chart.dispatch(event)
        if result.fired:
            self.tracer.record(TraceKind.TRANSITION, transition_detail(result))
        self.pending.extend(result.raised)

    def settle(self) -> None:
        """Run rounds until the current instant is quiet."""
        monitors_due = True
        for _ in range(self.max_rounds):
            progressed = self._deliver_due()
            if monitors_due:
                self._evaluate_monitors()
                monitors_due = False
            if self.pending:
                batch, self.pending = self.pending, []
                for event in batch:
                    self._dispatch(event)
                progressed = True
            if self.now >= self._busy_until and self.engine.pending:
                self._blocked_ms = 0.0
                self.engine.step()
                self._busy_until = self.now + int(round(self._blocked_ms))
                self._blocked_ms = 0.0
                monitors_due = True
                progressed = True
            if not progressed:
                return
        message = f"T={self.now}: no quiescence after {self.max_rounds} rounds"
        logger.error(message)
        self.failures.append(message)

    def _move_to(self, target: int) -> None:
        if target > self.now:
            raised = self.chart.tick(target - self.now)
            self.now = target
            self.pending.extend(raised)

    def advance_to(self, target: int) -> None:
        """Advance logical time, stopping at every timer expiry and completion."""
        while True:
            candidates = [ready for ready, _, _ in self._deferred]
            deadline = self.chart.next_deadline()
            if deadline is not None:
                candidates.append(self.now + max(deadline, 0))
            if self.engine.pending and self._busy_until > self.now:
                candidates.append(self._busy_until)
            upcoming = min(candidates, default=None)
            if upcoming is None or upcoming > target or upcoming <= self.now:
                break
            self._move_to(upcoming)
            self.settle()
        self._move_to(target)

    def _perform(self, directive: Directive) -> None:
        if directive.kind is DirectiveKind.INJECT:
            self.pending.append(Event(directive.subject, payload=directive.value, source="scenario"))
            return
        try:
            self.registry.write_port(directive.subject, directive.value)
            self.tracer.record(TraceKind.WRITE, f"{directive.subject} {format_value(directive.value)}")
        except CoordConfError as e:
            self.failures.append(f"T={self.now} {directive}: {e}")

    def run(self) -> RunResult:
        self.pending.extend(self.chart.init())
        self.tracer.record(TraceKind.INIT, f"{self.inputs.spec.name} {self.chart.active_path}")
        self.settle()

        script = self.inputs.script
        for t in script.times():
            self.advance_to(t)
            directives = script.at(t)
            for directive in directives:
                if directive.kind is not DirectiveKind.EXPECT:
                    self._perform(directive)
            self.settle()
            for directive in directives:
                if directive.kind is DirectiveKind.EXPECT:
                    self._check(directive)

        return RunResult(RunMode.DETERMINISTIC, self.tracer.records, self.failures)

    def _check(self, directive: Directive) -> None:
        failure = check_expectation(directive, self.chart.active_path, self.registry, self.seen)
        if failure is None:
            self.tracer.record(TraceKind.ASSERT, f"pass {directive}")
        else:
            self.tracer.record(TraceKind.ASSERT, f"FAIL {failure}")
            self.failures.append(f"T={self.now} {failure}")


class ThreadedRunner:
    """Coordinator, configurator and bus in separate threads, real time."""

    POLL_SECONDS = 0.005

    def __init__(self, inputs: ScenarioInputs, config: Optional[Config] = None):
        config = config or Config()
        self.inputs = inputs
        self.watchdog_seconds = config.harness.watchdog_seconds
        self.tracer = Tracer(clock=wall_clock())
        self.failures: list[str] = []
        self.registry = build_registry(inputs.model)
        self.bus = EventBus(capacity=config.harness.bus_capacity)
        self.engine = ConfiguratorEngine(
            inputs.conf,
            self.registry,
            config.engine,
            types=inputs.model.types,
            emit=self.bus.publish,
            on_report=lambda report: self.tracer.record(TraceKind.CONF, conf_detail(report)),
        )
        self.chart = Statechart(inputs.spec)
        self.monitors = [Monitor(spec) for spec in inputs.model.monitors]
        self.view = RegistryView(self.registry)
        self.inbox: queue.Queue[Event] = queue.Queue(maxsize=config.harness.bus_capacity)
        self.bus.subscribe(self._to_coordinator)
        self.bus.subscribe(self.engine.on_event)

        self._lock = threading.Lock()
        self._active_path = ""
        self._seen: set[str] = set()
        self._heartbeat = time.monotonic()
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []

    def _to_coordinator(self, event: Event) -> None:
        try:
            self.inbox.put_nowait(event)
        except queue.Full:
            logger.error(f"Coordinator inbox full, dropped {event}")

    def _coordinator_loop(self) -> None:
        last_tick = time.monotonic()
        while not self._stop.is_set():
            self._heartbeat = time.monotonic()
            deadline = self.chart.next_deadline()
            timeout = self.POLL_SECONDS if deadline is None else min(max(deadline, 0) / 1000.0, self.POLL_SECONDS)
            try:
                event: Optional[Event] = self.inbox.get(timeout=timeout)
            except queue.Empty:
                event = None

            elapsed_ms = int((time.monotonic() - last_tick) * 1000.0)
            if elapsed_ms > 0:
                last_tick += elapsed_ms / 1000.0
                for raised in self.chart.tick(elapsed_ms):
                    self.bus.publish(raised)
            if event is None:
                continue

            self.tracer.record(TraceKind.EVENT, str(event))
            result = self.chart.dispatch(event)
            with self._lock:
                self._seen.add(event.name)
                self._active_path = self.chart.active_path
            if result.fired:
                self.tracer.record(TraceKind.TRANSITION, transition_detail(result))
            for raised in result.raised:
                self.bus.publish(raised)

    def _watchdog_loop(self) -> None:
        while not self._stop.wait(0.1):
            stalled = time.monotonic() - self._heartbeat
            if stalled > self.watchdog_seconds:
                message = f"watchdog: coordinator made no progress for {stalled:.1f} s"
                logger.error(message)
                self.failures.append(message)
                self._stop.set()

    def _evaluate_monitors(self) -> None:
        for monitor in self.monitors:
            try:
                event = monitor.evaluate(self.view)
            except MonitorError as e:
                logger.warning(f"Monitor {monitor.spec.id}: {e}")
                continue
            if event is not None:
                self.tracer.record(TraceKind.MONITOR, f"{monitor.spec.id} {event.name}")
                self.bus.publish(event)

    def _wait_until(self, started: float, t_ms: int) -> None:
        while not self._stop.is_set():
            remaining = started + t_ms / 1000.0 - time.monotonic()
            if remaining <= 0:
                return
            self._evaluate_monitors()
            time.sleep(min(remaining, self.POLL_SECONDS))

    def _wait_idle(self, timeout: float = 0.2, quiet_polls: int = 3) -> None:
        """Wait until bus, coordinator and configurator stay idle for a few polls."""
        limit = time.monotonic() + timeout
        quiet = 0
        while time.monotonic() < limit and not self._stop.is_set():
            if self.bus.pending or self.inbox.qsize() or self.engine.pending or self.engine.busy:
                quiet = 0
            else:
                quiet += 1
                if quiet >= quiet_polls:
                    return
            time.sleep(self.POLL_SECONDS)

    def _start(self) -> None:
        self.bus.start()
        self.engine.start()
        for name, target in (("coordinator", self._coordinator_loop), ("watchdog", self._watchdog_loop)):
            thread = threading.Thread(target=target, name=name, daemon=True)
            thread.start()
            self._threads.append(thread)

    def _shutdown(self) -> None:
        self._stop.set()
        for thread in self._threads:
            thread.join(1.0)
        self.engine.stop(timeout=0.2)
        self.bus.stop()

    def run(self) -> RunResult:
        for raised in self.chart.init():
            self.bus.publish(raised)
        self._active_path = self.chart.active_path
        self.tracer.record(TraceKind.INIT, f"{self.inputs.spec.name} {self._active_path}")
        self._start()
        started = time.monotonic()

        try:
            script = self.inputs.script
            for t in script.times():
                self._wait_until(started, t)
                if self._stop.is_set():
                    break
                directives = script.at(t)
                for directive in directives:
                    if directive.kind is DirectiveKind.INJECT:
                        self.bus.publish(Event(directive.subject, payload=directive.value, source="scenario"))
                    elif directive.kind is DirectiveKind.WRITE:
                        self._write(directive)
                if any(d.kind is DirectiveKind.EXPECT for d in directives):
                    self._wait_idle()
                for directive in directives:
                    if directive.kind is DirectiveKind.EXPECT:
                        self._check(directive)
        finally:
            self._shutdown()
        return RunResult(RunMode.THREADED, self.tracer.records, self.failures)

    def _write(self, directive: Directive) -> None:
        try:
            self.registry.write_port(directive.subject, directive.value)
            self.tracer.record(TraceKind.WRITE, f"{directive.subject} {format_value(directive.value)}")
        except CoordConfError as e:
            self.failures.append(f"T={directive.time} {directive}: {e}")
        self._evaluate_monitors()

    def _check(self, directive: Directive) -> None:
        with self._lock:
            active_path = self._active_path
            seen = set(self._seen)
        failure = check_expectation(directive, active_path, self.registry, seen)
        if failure is None:
            self.tracer.record(TraceKind.ASSERT, f"pass {directive}")
        else:
            self.tracer.record(TraceKind.ASSERT, f"FAIL {failure}")
            self.failures.append(f"T={directive.time} {failure}")


def run_scenario(
    inputs: ScenarioInputs,
    mode: Union[RunMode, str] = RunMode.DETERMINISTIC,
    config: Optional[Config] = None,
) -> RunResult:
    """Run a scenario and collect its trace and failed expectations."""
    mode = RunMode(mode)
    runner = DeterministicRunner(inputs, config) if mode is RunMode.DETERMINISTIC else ThreadedRunner(inputs, config)
    logger.info(f"Running scenario in {mode.value} mode")
    result = runner.run()
    logger.info(f"Scenario finished: {len(result.failures)} failures, {len(result.records)} trace records")
    return result
