"""The Configurator: applies named configurations to the component registry.

Events whose name matches a configuration id are queued and applied one
at a time, FIFO. Each application runs four phases:

1. RESOLVE  every lifecycle subject and change target must exist;
            nothing is touched when one does not
2. PRE      pre_conf_state entries in declaration order, then ``_default``
3. CHANGES  creates, connects, the remaining changes, disconnects, destroys
4. POST     post_conf_state, same rules as PRE

The first runtime failure aborts the remaining phases. Changes already
made are kept. Every application ends with exactly one status event,
``conf.applied.<id>`` or ``conf.failed.<id>``.
"""

import logging
import queue
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional

from pydantic import BaseModel, Field

from coordconf.config import EngineConfig
from coordconf.dsl.model import Change, ChangeKind, Configuration, ConfiguratorConf, LifecycleSpecEntry
from coordconf.dsl.printer import format_change
from coordconf.dsl.validate import port_write_overlaps
from coordconf.errors import (
    CoordConfError,
    EmptyStack,
    OperationFailed,
    QueueFull,
    ResolutionError,
    UnknownComponentType,
    UnknownConfiguration,
)
from coordconf.events import Event
from coordconf.runtime.component import ComponentDeclarations, LifecycleState
from coordconf.runtime.registry import ComponentRegistry, split_target
from coordconf.runtime.snapshot import SystemSnapshot
from coordconf.values import Value

logger = logging.getLogger(__name__)

_CHANGE_ORDER = {
    ChangeKind.COMPONENT_CREATE: 0,
    ChangeKind.CONNECTION_CREATE: 1,
    ChangeKind.PROPERTY_SET: 2,
    ChangeKind.PORT_WRITE: 2,
    ChangeKind.OPERATION_CALL: 2,
    ChangeKind.CONNECTION_REMOVE: 3,
    ChangeKind.COMPONENT_DESTROY: 4,
}


class Outcome(str, Enum):
    APPLIED = "applied"
    FAILED = "failed"


class Phase(str, Enum):
    RESOLVE = "resolve"
    PRE = "pre"
    CHANGES = "changes"
    POST = "post"


class ChangeResult(BaseModel):
    """Result of one applied change."""

    change: str
    ok: bool
    detail: str = ""


class ApplyReport(BaseModel):
    """What happened when a configuration was applied (or undone)."""

    config_id: str
    outcome: Outcome = Outcome.APPLIED
    phase: Phase = Phase.RESOLVE
    detail: Optional[str] = None
    error: Optional[str] = None
    changes: list[ChangeResult] = Field(default_factory=list)
    warnings: list[str] = Field(default_factory=list)
    duration_ms: float = 0.0

    @property
    def ok(self) -> bool:
        return self.outcome is Outcome.APPLIED

    def fail(self, phase: Phase, exc: Exception) -> "ApplyReport":
        self.outcome = Outcome.FAILED
        self.phase = phase
        self.detail = str(exc)
        self.error = type(exc).__name__
        return self


@dataclass
class Inverse:
    """Recorded prior state needed to undo a configuration.

    A port mapped to None was absent (never written) before.
    """

    lifecycles: dict[str, LifecycleState] = field(default_factory=dict)
    properties: dict[str, Value] = field(default_factory=dict)
    ports: dict[str, Optional[Value]] = field(default_factory=dict)
    skipped: list[str] = field(default_factory=list)


@dataclass
class StackEntry:
    config_id: str
    inverse: Inverse
    snapshot_before: SystemSnapshot


class ConfiguratorEngine:
    """Applies configurations from a ConfiguratorConf to a registry."""

    def __init__(
        self,
        conf: ConfiguratorConf,
        registry: ComponentRegistry,
        config: Optional[EngineConfig] = None,
        types: Optional[dict[str, ComponentDeclarations]] = None,
        emit: Optional[Callable[[Event], None]] = None,
        on_report: Optional[Callable[[ApplyReport], None]] = None,
    ):
        """Initialize the engine.

        Args:
            conf: Configurations, keyed by id
            registry: Components the configurations act on
            config: Engine settings
            types: Type catalog used by component_create
            emit: Receives status events
            on_report: Receives every ApplyReport, including rejected ones
        """
        self.conf = conf
        self.registry = registry
        self.config = config or EngineConfig()
        self.types = types or {}
        self._emit = emit
        self._on_report = on_report
        self._queue: queue.Queue[str] = queue.Queue(maxsize=self.config.queue_capacity)
        self._stack: list[StackEntry] = []
        # one application at a time, whoever drives the engine
        self._apply_lock = threading.Lock()
        self._stop = threading.Event()
        self._worker: Optional[threading.Thread] = None

    # Event intake

    def on_event(self, event: Event) -> None:
        """Schedule the configuration named by ``event``; never blocks.

        Events that name no configuration are ignored.
        """
        if event.name not in self.conf:
            return
        try:
            self._queue.put_nowait(event.name)
            logger.debug(f"Queued configuration {event.name} ({self._queue.qsize()} pending)")
        except queue.Full:
            logger.warning(f"Configuration queue full, rejecting {event.name}")
            report = ApplyReport(config_id=event.name).fail(Phase.RESOLVE, QueueFull(event.name))
            self._finish(report)

    @property
    def pending(self) -> int:
        return self._queue.qsize()

    @property
    def busy(self) -> bool:
        return self._apply_lock.locked()

    def step(self) -> Optional[ApplyReport]:
        """Apply the next queued configuration, if any (deterministic mode)."""
        try:
            config_id = self._queue.get_nowait()
        except queue.Empty:
            return None
        return self._apply_queued(config_id)

    def start(self) -> None:
        """Run a worker thread that applies queued configurations."""
        if self._worker is not None and self._worker.is_alive():
            return
        self._stop.clear()
        self._worker = threading.Thread(target=self._run, name="configurator", daemon=True)
        self._worker.start()
        logger.info("Configurator worker started")

    def stop(self, timeout: float = 1.0) -> None:
        """Stop the worker thread; a worker stuck in a blocking call is abandoned."""
        self._stop.set()
        if self._worker is not None:
            self._worker.join(timeout)
            if self._worker.is_alive():
                logger.warning("Configurator worker still busy at shutdown")
            self._worker = None

    def _run(self) -> None:
        while not self._stop.is_set():
            try:
                config_id = self._queue.get(timeout=0.05)
            except queue.Empty:
                continue
            try:
                self._apply_queued(config_id)
            except Exception as e:
                logger.error(f"Error in configurator loop: {e}")

    def _apply_queued(self, config_id: str) -> ApplyReport:
        report = self.apply_configuration(self.conf[config_id], config_id)
        self._finish(report)
        return report

    def _finish(self, report: ApplyReport) -> None:
        if report.ok:
            logger.info(f"Configuration {report.config_id} applied in {report.duration_ms:.2f} ms")
        else:
            logger.warning(
                f"Configuration {report.config_id} failed in phase {report.phase.value}: {report.detail}"
            )
        if self._on_report is not None:
            self._on_report(report)
        if self._emit is not None:
            self._emit(self.status_event(report))

    def status_event(self, report: ApplyReport) -> Event:
        if report.ok:
            return Event(self.config.applied_name(report.config_id), source="configurator")
        return Event(self.config.failed_name(report.config_id), payload=report.detail or "", source="configurator")

    # Application

    def apply(self, config_id: str) -> ApplyReport:
        """Apply a configuration by id, synchronously, without a status event.

        Raises:
            UnknownConfiguration: If the id is not defined
        """
        if config_id not in self.conf:
            raise UnknownConfiguration(config_id)
        return self.apply_configuration(self.conf[config_id], config_id)

    def apply_configuration(self, config: Configuration, config_id: str = "<anonymous>") -> ApplyReport:
        """Run the four phases for one configuration.

        Never raises for runtime problems: they end up in the report.
        """
        report = ApplyReport(config_id=config_id)
        started = time.perf_counter()
        with self._apply_lock:
            try:
                self._apply_phases(config, report)
            except Exception as e:
                logger.exception(f"Unexpected error applying {config_id}")
                report.fail(report.phase, e)
        report.duration_ms = (time.perf_counter() - started) * 1000.0
        logger.debug(f"{config_id}: {report.outcome.value} phase={report.phase.value} in {report.duration_ms:.3f} ms")
        return report

    def _apply_phases(self, config: Configuration, report: ApplyReport) -> None:
        problems = self.resolve(config)
        if problems:
            report.fail(Phase.RESOLVE, ResolutionError(problems))
            return

        report.phase = Phase.PRE
        try:
            self._bring_all(self.expand(config.pre, config.mentioned))
        except CoordConfError as e:
            report.fail(Phase.PRE, e)
            return

        report.phase = Phase.CHANGES
        for change in sorted(config.changes, key=lambda c: _CHANGE_ORDER[c.kind]):
            try:
                self._apply_change(change)
            except CoordConfError as e:
                report.changes.append(ChangeResult(change=format_change(change), ok=False, detail=str(e)))
                report.fail(Phase.CHANGES, e)
                return
            report.changes.append(ChangeResult(change=format_change(change), ok=True))

        # post _default covers components created above
        report.phase = Phase.POST
        try:
            self._bring_all(self.expand(config.post, config.mentioned))
        except CoordConfError as e:
            report.fail(Phase.POST, e)

    def resolve(self, config: Configuration) -> list[str]:
        """Check that every subject and target exists and that no two port writes
        reach the same port. Returns the problems found.
        """
        existing = set(self.registry.component_ids())
        created: dict[str, ComponentDeclarations] = {}
        destroyed: set[str] = set()
        problems: list[str] = []

        for change in config.changes:
            if change.kind is ChangeKind.COMPONENT_CREATE:
                type_name = str(change.args[0])
                if type_name not in self.types:
                    problems.append(str(UnknownComponentType(type_name)))
                else:
                    created[change.target] = self.types[type_name]
            elif change.kind is ChangeKind.COMPONENT_DESTROY:
                destroyed.add(change.target)

        for entry in config.pre:
            if not entry.is_default and entry.subject not in existing:
                problems.append(f"pre_conf_state: unknown component {entry.subject}")
        for entry in config.post:
            if entry.is_default:
                continue
            if entry.subject not in (existing | set(created)) or entry.subject in destroyed:
                problems.append(f"post_conf_state: unknown component {entry.subject}")

        for change in config.changes:
            problem = self._resolve_change(change, existing, created)
            if problem:
                problems.append(f"{format_change(change)}: {problem}")

        connections = [(c.source, c.target) for c in self.registry.connections()]
        for change, port, earlier in port_write_overlaps(config.changes, connections):
            problems.append(
                f"{format_change(change)}: conflicting changes: port {port} is also written by {format_change(earlier)}"
            )
        return problems

    def _resolve_change(
        self, change: Change, existing: set[str], created: dict[str, ComponentDeclarations]
    ) -> Optional[str]:
        if change.kind is ChangeKind.COMPONENT_CREATE:
            return None
        if change.kind is ChangeKind.COMPONENT_DESTROY:
            return None if change.target in existing else f"unknown component {change.target}"

        endpoints = [change.target]
        if change.kind in (ChangeKind.CONNECTION_CREATE, ChangeKind.CONNECTION_REMOVE):
            endpoints.append(change.peer)
        for endpoint in endpoints:
            comp, name = split_target(endpoint)
            if comp in created:
                decls = created[comp]
                has_port = name in decls.in_ports or name in decls.out_ports
                has_property = name in decls.properties
                arity = decls.operations.get(name)
            elif comp in existing:
                has_port = self.registry.has_port(endpoint)
                has_property = self.registry.has_property(endpoint)
                arity = self.registry.operation_arity(endpoint)
            else:
                return f"unknown component {comp}"

            if change.kind is ChangeKind.PROPERTY_SET and not has_property:
                return f"unknown property {endpoint}"
            if change.kind is ChangeKind.OPERATION_CALL:
                if arity is None:
                    return f"unknown operation {endpoint}"
                if arity != len(change.args):
                    return f"operation {endpoint} takes {arity} arguments, got {len(change.args)}"
            if change.kind not in (ChangeKind.PROPERTY_SET, ChangeKind.OPERATION_CALL) and not has_port:
                return f"unknown port {endpoint}"
        return None

    def expand(
        self, entries: tuple[LifecycleSpecEntry, ...], mentioned: Iterable[str] = ()
    ) -> list[tuple[str, LifecycleState]]:
        """Explicit entries in declaration order, then ``_default`` over the rest.

        ``_default`` covers every component currently in the registry that
        is not named in ``entries`` or ``mentioned``, in id order, except
        Fatal ones.
        """
        plan = [(e.subject, e.target) for e in entries if not e.is_default]
        default = next((e for e in entries if e.is_default), None)
        if default is not None:
            mentioned = {e.subject for e in entries} | set(mentioned)
            for cid in self.registry.component_ids():
                if cid in mentioned:
                    continue
                if self.registry.lifecycle_of(cid) is LifecycleState.FATAL:
                    logger.debug(f"_default skips Fatal component {cid}")
                    continue
                plan.append((cid, default.target))
        return plan

    def _bring_all(self, plan: list[tuple[str, LifecycleState]]) -> None:
        for cid, target in plan:
            self.registry.bring_to(cid, target)

    def _apply_change(self, change: Change) -> None:
        if change.kind.is_deployment:
            self.apply_deployment_change(change)
        elif change.kind is ChangeKind.PROPERTY_SET:
            self.registry.set_property(change.target, change.value)
        elif change.kind is ChangeKind.PORT_WRITE:
            self.registry.write_port(change.target, change.value)
        else:
            outcome = self.registry.call_operation(change.target, change.args)
            if not outcome.success:
                raise OperationFailed(change.target, outcome.message)

    def apply_deployment_change(self, change: Change) -> None:
        """Create or destroy a component or a connection.

        Raises:
            UnknownComponentType: If component_create names a type not in the catalog
            RuntimeModelError: Whatever the registry raises
        """
        if change.kind is ChangeKind.COMPONENT_CREATE:
            type_name = str(change.args[0])
            if type_name not in self.types:
                raise UnknownComponentType(type_name)
            self.registry.component_create(change.target, type_name, self.types[type_name])
        elif change.kind is ChangeKind.COMPONENT_DESTROY:
            self.registry.component_destroy(change.target)
        elif change.kind is ChangeKind.CONNECTION_CREATE:
            self.registry.connection_create(change.target, change.peer)
        elif change.kind is ChangeKind.CONNECTION_REMOVE:
            self.registry.connection_remove(change.target, change.peer)
        else:
            raise ValueError(f"Not a deployment change: {change.kind.value}")

    # Configuration stack

    @property
    def stack_depth(self) -> int:
        return len(self._stack)

    def peek(self) -> Optional[StackEntry]:
        """Top of the stack without popping it."""
        return self._stack[-1] if self._stack else None

    def push_configuration(self, config_id: str) -> ApplyReport:
        """Apply a configuration and remember how to undo it.

        The entry is pushed only when the application succeeds.

        Raises:
            UnknownConfiguration: If the id is not defined
        """
        if config_id not in self.conf:
            raise UnknownConfiguration(config_id)
        config = self.conf[config_id]
        before = self.registry.take_snapshot()
        inverse = self._record_inverse(config, before)
        report = self.apply_configuration(config, config_id)
        report.warnings.extend(f"not undoable: {s}" for s in inverse.skipped)
        if report.ok:
            self._stack.append(StackEntry(config_id, inverse, before))
            logger.info(f"Pushed {config_id} (stack depth {len(self._stack)})")
        return report

    def _record_inverse(self, config: Configuration, before: SystemSnapshot) -> Inverse:
        inverse = Inverse()
        for component in before.components:
            inverse.lifecycles[component.id] = component.lifecycle
        for change in config.changes:
            if change.kind is ChangeKind.PROPERTY_SET:
                comp, name = split_target(change.target)
                if comp in before.component_ids:
                    inverse.properties[change.target] = before.component(comp).property_value(name)
            elif change.kind is ChangeKind.PORT_WRITE:
                for target in [change.target] + self._connected_in_ports(change.target):
                    comp, name = split_target(target)
                    if comp in before.component_ids:
                        inverse.ports[target] = before.component(comp).port_value(name)
            else:
                inverse.skipped.append(format_change(change))
        return inverse

    def _connected_in_ports(self, target: str) -> list[str]:
        if not self.registry.has_port(target):
            return []
        return self.registry.connected_in_ports(target)

    def pop_configuration(self) -> ApplyReport:
        """Undo the most recently pushed configuration.

        Ports are restored first without propagation, then properties, then
        lifecycle states in id order. The entry is consumed even if the undo
        fails.

        Raises:
            EmptyStack: If nothing was pushed
        """
        if not self._stack:
            raise EmptyStack()
        entry = self._stack.pop()
        inverse = entry.inverse
        report = ApplyReport(config_id=entry.config_id)
        report.warnings.extend(f"not undone: {s}" for s in inverse.skipped)
        started = time.perf_counter()
        with self._apply_lock:
            report.phase = Phase.CHANGES
            try:
                for target, value in inverse.ports.items():
                    self.registry.restore_port(target, value)
                for target, value in inverse.properties.items():
                    self.registry.set_property(target, value)
                report.phase = Phase.POST
                for cid in sorted(inverse.lifecycles):
                    self._restore_lifecycle(cid, inverse.lifecycles[cid], report)
            except CoordConfError as e:
                report.fail(report.phase, e)
        report.duration_ms = (time.perf_counter() - started) * 1000.0
        logger.info(f"Popped {entry.config_id}: {report.outcome.value} (stack depth {len(self._stack)})")
        return report

    def _restore_lifecycle(self, cid: str, prior: LifecycleState, report: ApplyReport) -> None:
        if cid not in self.registry:
            report.warnings.append(f"{cid} no longer exists")
            return
        current = self.registry.lifecycle_of(cid)
        if current is prior:
            return
        if LifecycleState.FATAL in (current, prior):
            report.warnings.append(f"{cid} cannot leave or return to Fatal")
            return
        self.registry.bring_to(cid, prior)
