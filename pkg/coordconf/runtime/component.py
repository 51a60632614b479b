"""Simulated components: lifecycle, ports, properties and operations."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from coordconf.errors import FatalEndpoint, IllegalTransition
from coordconf.values import Value, ValueKind


class LifecycleState(str, Enum):
    """Runtime stage of a component."""

    PRE_OPERATIONAL = "PreOperational"
    STOPPED = "Stopped"
    RUNNING = "Running"
    FATAL = "Fatal"

    @classmethod
    def parse(cls, text: str) -> "LifecycleState":
        """Parse a state name as written in model files and the DSL.

        ``configure`` is an alias for Stopped, the state the configure
        command leads to.

        Raises:
            ValueError: If the name is not a lifecycle state
        """
        key = text.strip().lower().replace("_", "")
        if key == "configure":
            return cls.STOPPED
        for state in cls:
            if state.value.lower() == key:
                return state
        raise ValueError(f"Unknown lifecycle state: {text}")


class LifecycleCommand(str, Enum):
    """Commands moving a component along the lifecycle chain."""

    CONFIGURE = "configure"
    START = "start"
    STOP = "stop"
    CLEANUP = "cleanup"


# PreOperational <-> Stopped <-> Running
LIFECYCLE_CHAIN = (
    LifecycleState.PRE_OPERATIONAL,
    LifecycleState.STOPPED,
    LifecycleState.RUNNING,
)

TRANSITIONS: dict[tuple[LifecycleState, LifecycleCommand], LifecycleState] = {
    (LifecycleState.PRE_OPERATIONAL, LifecycleCommand.CONFIGURE): LifecycleState.STOPPED,
    (LifecycleState.STOPPED, LifecycleCommand.START): LifecycleState.RUNNING,
    (LifecycleState.RUNNING, LifecycleCommand.STOP): LifecycleState.STOPPED,
    (LifecycleState.STOPPED, LifecycleCommand.CLEANUP): LifecycleState.PRE_OPERATIONAL,
}

_UP = (LifecycleCommand.CONFIGURE, LifecycleCommand.START)
_DOWN = (LifecycleCommand.CLEANUP, LifecycleCommand.STOP)


def next_state(current: LifecycleState, command: LifecycleCommand) -> LifecycleState:
    """Return the state a command leads to.

    Raises:
        IllegalTransition: If the command is not legal from ``current``
    """
    try:
        return TRANSITIONS[(current, command)]
    except KeyError:
        raise IllegalTransition(current.value, command.value) from None


def compute_lifecycle_path(
    source: LifecycleState, target: LifecycleState
) -> list[LifecycleCommand]:
    """Shortest command sequence leading from one state to another.

    Raises:
        FatalEndpoint: If either endpoint is Fatal
    """
    for state in (source, target):
        if state is LifecycleState.FATAL:
            raise FatalEndpoint(state.value)

    i = LIFECYCLE_CHAIN.index(source)
    j = LIFECYCLE_CHAIN.index(target)
    if j > i:
        return list(_UP[i:j])
    return [_DOWN[k] for k in range(i - 1, j - 1, -1)]


class BehaviorKind(str, Enum):
    """What an operation does when called."""

    SUCCEED = "succeed"
    FAIL = "fail"
    BLOCK = "block"
    CRASH = "crash"


@dataclass(frozen=True)
class OperationBehavior:
    """Fault-injection knob of an operation."""

    kind: BehaviorKind = BehaviorKind.SUCCEED
    message: str = ""
    duration_ms: int = 0

    def __str__(self) -> str:
        if self.kind is BehaviorKind.FAIL:
            return f'fail "{self.message}"'
        if self.kind is BehaviorKind.BLOCK:
            return f"block {self.duration_ms}"
        return self.kind.value


@dataclass
class OperationSpec:
    """A callable provided by a component."""

    name: str
    arity: int = 0
    behavior: OperationBehavior = field(default_factory=OperationBehavior)

    def __post_init__(self):
        if self.arity < 0:
            raise ValueError(f"Operation {self.name}: arity must be >= 0")


@dataclass(frozen=True)
class CallOutcome:
    """Result of an operation call."""

    success: bool
    message: str = ""

    @classmethod
    def ok(cls) -> "CallOutcome":
        return cls(True)

    @classmethod
    def failure(cls, message: str) -> "CallOutcome":
        return cls(False, message)


@dataclass
class PropertyDecl:
    name: str
    kind: ValueKind
    default: Value


@dataclass
class ComponentDeclarations:
    """Properties, ports and operations a component is created with.

    This is what a type catalog entry holds; instances may extend it.
    """

    properties: dict[str, PropertyDecl] = field(default_factory=dict)
    in_ports: list[str] = field(default_factory=list)
    out_ports: list[str] = field(default_factory=list)
    operations: dict[str, int] = field(default_factory=dict)

    def merged(self, other: "ComponentDeclarations") -> "ComponentDeclarations":
        """Return a copy extended by ``other`` (other wins on conflicts)."""
        return ComponentDeclarations(
            properties={**self.properties, **other.properties},
            in_ports=self.in_ports + [p for p in other.in_ports if p not in self.in_ports],
            out_ports=self.out_ports + [p for p in other.out_ports if p not in self.out_ports],
            operations={**self.operations, **other.operations},
        )


@dataclass
class Component:
    """A simulated component held by the registry."""

    id: str
    type_name: str
    lifecycle: LifecycleState = LifecycleState.PRE_OPERATIONAL
    properties: dict[str, Value] = field(default_factory=dict)
    property_kinds: dict[str, ValueKind] = field(default_factory=dict)
    in_ports: dict[str, Optional[Value]] = field(default_factory=dict)
    out_ports: dict[str, Optional[Value]] = field(default_factory=dict)
    port_kinds: dict[str, ValueKind] = field(default_factory=dict)
    operations: dict[str, OperationSpec] = field(default_factory=dict)

    @classmethod
    def from_declarations(
        cls, component_id: str, type_name: str, decls: ComponentDeclarations
    ) -> "Component":
        """Create a component in PreOperational from its declarations."""
        return cls(
            id=component_id,
            type_name=type_name,
            properties={name: p.default for name, p in decls.properties.items()},
            property_kinds={name: p.kind for name, p in decls.properties.items()},
            in_ports={name: None for name in decls.in_ports},
            out_ports={name: None for name in decls.out_ports},
            operations={name: OperationSpec(name, arity) for name, arity in decls.operations.items()},
        )

    def has_port(self, name: str) -> bool:
        return name in self.in_ports or name in self.out_ports

    def port_value(self, name: str) -> Optional[Value]:
        if name in self.out_ports:
            return self.out_ports[name]
        return self.in_ports[name]
