"""Component registry: the in-process stand-in for a component framework."""

import logging
import threading
import time
from typing import Callable, Iterable, Optional

from coordconf.errors import (
    ArityMismatch,
    ComponentFatal,
    DestroyWhileRunning,
    DuplicateConnection,
    DuplicateId,
    UnknownComponent,
    UnknownConnection,
    UnknownOperation,
    UnknownPort,
    UnknownProperty,
)
from coordconf.runtime.component import (
    BehaviorKind,
    CallOutcome,
    Component,
    ComponentDeclarations,
    LifecycleCommand,
    LifecycleState,
    OperationBehavior,
    compute_lifecycle_path,
    next_state,
)
from coordconf.runtime.snapshot import ComponentSnapshot, Connection, SystemSnapshot
from coordconf.values import Value, coerce, kind_of, make_value

logger = logging.getLogger(__name__)


def split_target(target: str) -> tuple[str, str]:
    """Split a ``comp.name`` path into its two parts.

    Raises:
        UnknownComponent: If the path does not contain exactly one dot
    """
    parts = target.split(".")
    if len(parts) != 2 or not all(parts):
        raise UnknownComponent(target)
    return parts[0], parts[1]


class ComponentRegistry:
    """Holds components and connections.

    All mutations run under one lock. A blocking operation releases the
    lock while it waits so only its caller is suspended.
    """

    def __init__(self, sleep: Callable[[float], None] = time.sleep):
        """Initialize an empty registry.

        Args:
            sleep: Function used to suspend a caller of a blocking operation
        """
        self._components: dict[str, Component] = {}
        self._connections: set[Connection] = set()
        self._lock = threading.RLock()
        self._sleep = sleep

    # Queries

    def __len__(self) -> int:
        with self._lock:
            return len(self._components)

    def __contains__(self, component_id: str) -> bool:
        with self._lock:
            return component_id in self._components

    def component_ids(self) -> list[str]:
        """Sorted ids of all components."""
        with self._lock:
            return sorted(self._components)

    def connections(self) -> list[Connection]:
        with self._lock:
            return sorted(self._connections)

    def lifecycle_of(self, component_id: str) -> LifecycleState:
        with self._lock:
            return self._get(component_id).lifecycle

    def has_port(self, target: str) -> bool:
        with self._lock:
            comp, name = split_target(target)
            return comp in self._components and self._components[comp].has_port(name)

    def has_property(self, target: str) -> bool:
        with self._lock:
            comp, name = split_target(target)
            return comp in self._components and name in self._components[comp].properties

    def operation_arity(self, target: str) -> Optional[int]:
        """Arity of an operation, or None if it does not exist."""
        with self._lock:
            comp, name = split_target(target)
            component = self._components.get(comp)
            if component is None or name not in component.operations:
                return None
            return component.operations[name].arity

    def read(self, target: str) -> Optional[Value]:
        """Read a port last-value or property value.

        Ports take precedence over properties of the same name.

        Raises:
            UnknownComponent: If the component does not exist
            UnknownPort: If neither a port nor a property has the name
        """
        with self._lock:
            comp, name = split_target(target)
            component = self._get(comp)
            if component.has_port(name):
                return component.port_value(name)
            if name in component.properties:
                return component.properties[name]
            raise UnknownPort(comp, name)

    def property_value(self, target: str) -> Value:
        """Raises UnknownProperty if the component has no such property."""
        with self._lock:
            comp, name = split_target(target)
            component = self._get(comp)
            if name not in component.properties:
                raise UnknownProperty(comp, name)
            return component.properties[name]

    def port_value(self, target: str) -> Optional[Value]:
        """Last value of a port, None if never written.

        Raises:
            UnknownPort: If the component has no such port
        """
        with self._lock:
            comp, name = split_target(target)
            component = self._get(comp)
            if not component.has_port(name):
                raise UnknownPort(comp, name)
            return component.port_value(name)

    def connected_in_ports(self, target: str) -> list[str]:
        """In-ports fed by an out-port, sorted."""
        with self._lock:
            return sorted(c.target for c in self._connections if c.source == target)

    # Lifecycle

    def lifecycle_command(self, component_id: str, command: LifecycleCommand) -> LifecycleState:
        """Advance a component one step along the lifecycle chain.

        Raises:
            UnknownComponent: If the component does not exist
            ComponentFatal: If the component is Fatal
            IllegalTransition: If the command is not legal from the current state
        """
        with self._lock:
            component = self._get(component_id)
            if component.lifecycle is LifecycleState.FATAL:
                raise ComponentFatal(component_id)
            new_state = next_state(component.lifecycle, LifecycleCommand(command))
            logger.debug(f"{component_id}: {component.lifecycle.value} --{command.value}--> {new_state.value}")
            component.lifecycle = new_state
            return new_state

    def bring_to(self, component_id: str, target: LifecycleState) -> list[LifecycleCommand]:
        """Run the command sequence leading a component to ``target``.

        Returns:
            The commands that were executed

        Raises:
            ComponentFatal: If the component is (or the target is) Fatal
        """
        with self._lock:
            current = self._get(component_id).lifecycle
            if current is LifecycleState.FATAL or target is LifecycleState.FATAL:
                raise ComponentFatal(component_id)
            path = compute_lifecycle_path(current, target)
            for command in path:
                self.lifecycle_command(component_id, command)
            return path

    def mark_fatal(self, component_id: str) -> None:
        with self._lock:
            logger.warning(f"Component {component_id} entered Fatal")
            self._get(component_id).lifecycle = LifecycleState.FATAL

    # Data flow

    def write_port(self, target: str, value: Value) -> None:
        """Write a value on a port.

        Writing an out-port propagates the value to every connected in-port.
        Nothing changes if any affected port rejects the kind.

        Raises:
            UnknownComponent: If the component does not exist
            UnknownPort: If the port does not exist
            KindMismatch: If a previously typed port gets another kind
        """
        value = make_value(value)
        with self._lock:
            comp, name = split_target(target)
            component = self._get(comp)
            if not component.has_port(name):
                raise UnknownPort(comp, name)

            writes = [(component, name, self._port_value(component, name, value, target))]
            value = writes[0][2]
            if name in component.out_ports:
                for conn in self._connections:
                    if conn.source != target:
                        continue
                    peer_id, peer_port = split_target(conn.target)
                    peer = self._components[peer_id]
                    writes.append((peer, peer_port, self._port_value(peer, peer_port, value, conn.target)))

            for owner, port, stored in writes:
                self._store_port(owner, port, stored)
            logger.debug(f"port {target} <- {value!r} ({len(writes) - 1} propagated)")

    def restore_port(self, target: str, value: Optional[Value]) -> None:
        """Put a port back to a recorded value.

        None restores the absent state, which also forgets the kind the port
        took on its first write. Unlike write_port nothing is propagated.
        """
        with self._lock:
            comp, name = split_target(target)
            component = self._get(comp)
            if not component.has_port(name):
                raise UnknownPort(comp, name)
            if value is None:
                self._store_port(component, name, None)
            else:
                self._store_port(component, name, self._port_value(component, name, make_value(value), target))

    def set_property(self, target: str, value: Value) -> None:
        """Replace a property value, keeping its declared kind.

        Raises:
            UnknownComponent: If the component does not exist
            UnknownProperty: If the property does not exist
            KindMismatch: If the value does not match the declared kind
        """
        value = make_value(value)
        with self._lock:
            comp, name = split_target(target)
            component = self._get(comp)
            if name not in component.properties:
                raise UnknownProperty(comp, name)
            component.properties[name] = coerce(value, component.property_kinds[name], target)
            logger.debug(f"property {target} <- {component.properties[name]!r}")

    # Operations

    def call_operation(self, target: str, args: Iterable[Value] = ()) -> CallOutcome:
        """Call an operation and run its configured behavior.

        A blocking operation suspends the calling thread only; the registry
        stays usable from other threads while it waits.

        Raises:
            UnknownComponent: If the component does not exist
            UnknownOperation: If the operation does not exist
            ArityMismatch: If the argument count is wrong
        """
        args = [make_value(a) for a in args]
        with self._lock:
            comp, name = split_target(target)
            component = self._get(comp)
            spec = component.operations.get(name)
            if spec is None:
                raise UnknownOperation(comp, name)
            if len(args) != spec.arity:
                raise ArityMismatch(target, spec.arity, len(args))
            behavior = spec.behavior

            if behavior.kind is BehaviorKind.FAIL:
                logger.info(f"operation {target} failed: {behavior.message}")
                return CallOutcome.failure(behavior.message)
            if behavior.kind is BehaviorKind.CRASH:
                component.lifecycle = LifecycleState.FATAL
                logger.warning(f"operation {target} crashed; {comp} is now Fatal")
                return CallOutcome.failure(f"{comp} crashed in {name}")

        if behavior.kind is BehaviorKind.BLOCK:
            logger.info(f"operation {target} blocking for {behavior.duration_ms} ms")
            self._sleep(behavior.duration_ms / 1000.0)
        return CallOutcome.ok()

    def set_behavior(self, target: str, behavior: OperationBehavior) -> None:
        """Fault injection: change what an operation does when called."""
        with self._lock:
            comp, name = split_target(target)
            component = self._get(comp)
            if name not in component.operations:
                raise UnknownOperation(comp, name)
            component.operations[name].behavior = behavior

    # Deployment

    def component_create(
        self, component_id: str, type_name: str, declarations: Optional[ComponentDeclarations] = None
    ) -> Component:
        """Create a component in PreOperational.

        Raises:
            DuplicateId: If the id is already taken
        """
        with self._lock:
            if component_id in self._components:
                raise DuplicateId(component_id)
            component = Component.from_declarations(
                component_id, type_name, declarations or ComponentDeclarations()
            )
            self._components[component_id] = component
            logger.info(f"Created component {component_id} ({type_name})")
            return component

    def component_destroy(self, component_id: str) -> None:
        """Remove a component and every connection touching it.

        Raises:
            UnknownComponent: If the component does not exist
            DestroyWhileRunning: If the component is Running
        """
        with self._lock:
            component = self._get(component_id)
            if component.lifecycle is LifecycleState.RUNNING:
                raise DestroyWhileRunning(component_id)
            self._connections = {c for c in self._connections if not c.touches(component_id)}
            del self._components[component_id]
            logger.info(f"Destroyed component {component_id}")

    def connection_create(self, source: str, target: str) -> Connection:
        """Connect an out-port to an in-port.

        Raises:
            UnknownComponent: If an endpoint component does not exist
            UnknownPort: If the source is not an out-port or the target not an in-port
            DuplicateConnection: If the pair is already connected
        """
        with self._lock:
            src_comp, src_port = split_target(source)
            dst_comp, dst_port = split_target(target)
            if src_port not in self._get(src_comp).out_ports:
                raise UnknownPort(src_comp, src_port)
            if dst_port not in self._get(dst_comp).in_ports:
                raise UnknownPort(dst_comp, dst_port)
            conn = Connection(source, target)
            if conn in self._connections:
                raise DuplicateConnection(source, target)
            self._connections.add(conn)
            logger.info(f"Connected {conn}")
            return conn

    def connection_remove(self, source: str, target: str) -> None:
        """Remove a connection.

        Raises:
            UnknownConnection: If the pair is not connected
        """
        with self._lock:
            conn = Connection(source, target)
            if conn not in self._connections:
                raise UnknownConnection(source, target)
            self._connections.remove(conn)
            logger.info(f"Disconnected {conn}")

    # Snapshots

    def take_snapshot(self) -> SystemSnapshot:
        """Deep copy of all observable state."""
        with self._lock:
            return SystemSnapshot(
                components=tuple(ComponentSnapshot.of(self._components[cid]) for cid in sorted(self._components)),
                connections=frozenset(self._connections),
            )

    # Internals

    def _get(self, component_id: str) -> Component:
        try:
            return self._components[component_id]
        except KeyError:
            raise UnknownComponent(component_id) from None

    @staticmethod
    def _port_value(component: Component, port: str, value: Value, target: str) -> Value:
        kind = component.port_kinds.get(port)
        if kind is None:
            return value
        return coerce(value, kind, target)

    @staticmethod
    def _store_port(component: Component, port: str, value: Optional[Value]) -> None:
        if value is None:
            component.port_kinds.pop(port, None)
        elif port not in component.port_kinds:
            component.port_kinds[port] = kind_of(value)
        if port in component.out_ports:
            component.out_ports[port] = value
        else:
            component.in_ports[port] = value


