"""Configurator DSL model: named configurations of lifecycle specs and changes."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from coordconf.runtime.component import LifecycleState
from coordconf.values import Value, values_equal

DEFAULT_SUBJECT = "_default"


class ChangeKind(str, Enum):
    """Kinds of changes a configuration may contain."""

    PROPERTY_SET = "property_set"
    PORT_WRITE = "port_write"
    OPERATION_CALL = "operation_call"
    COMPONENT_CREATE = "component_create"
    COMPONENT_DESTROY = "component_destroy"
    CONNECTION_CREATE = "connection_create"
    CONNECTION_REMOVE = "connection_remove"

    @property
    def is_deployment(self) -> bool:
        return self in DEPLOYMENT_KINDS

    @property
    def is_dotted(self) -> bool:
        """Whether the target is a ``comp.name`` path."""
        return self in (ChangeKind.PROPERTY_SET, ChangeKind.PORT_WRITE, ChangeKind.OPERATION_CALL)


DEPLOYMENT_KINDS = frozenset(
    {
        ChangeKind.COMPONENT_CREATE,
        ChangeKind.COMPONENT_DESTROY,
        ChangeKind.CONNECTION_CREATE,
        ChangeKind.CONNECTION_REMOVE,
    }
)


@dataclass(frozen=True)
class LifecycleSpecEntry:
    """Bring ``subject`` (a component id or ``_default``) to ``target``."""

    subject: str
    target: LifecycleState
    line: int = field(default=0, compare=False)

    @property
    def is_default(self) -> bool:
        return self.subject == DEFAULT_SUBJECT


@dataclass(frozen=True, eq=False)
class Change:
    """One change of a configuration.

    For connection changes ``target`` is the source endpoint and ``args``
    holds the destination endpoint.
    """

    kind: ChangeKind
    target: str
    args: tuple[Value, ...] = ()
    line: int = 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Change):
            return NotImplemented
        return (
            self.kind == other.kind
            and self.target == other.target
            and len(self.args) == len(other.args)
            and all(values_equal(a, b) for a, b in zip(self.args, other.args))
        )

    def __hash__(self) -> int:
        return hash((self.kind, self.target, len(self.args)))

    @property
    def value(self) -> Optional[Value]:
        """The single value of a property_set or port_write."""
        return self.args[0] if self.args else None

    @property
    def peer(self) -> str:
        """Destination endpoint of a connection change."""
        return str(self.args[0])


@dataclass(frozen=True)
class Configuration:
    """Pre/post lifecycle specs plus a change set.

    Changes are semantically unordered; they are kept in declaration order
    only so results are reproducible.
    """

    pre: tuple[LifecycleSpecEntry, ...] = ()
    post: tuple[LifecycleSpecEntry, ...] = ()
    changes: tuple[Change, ...] = ()
    line: int = field(default=0, compare=False)

    @property
    def mentioned(self) -> frozenset[str]:
        """Components named explicitly in pre or post."""
        return frozenset(e.subject for e in self.pre + self.post if not e.is_default)


@dataclass(frozen=True)
class ConfiguratorConf:
    """Named configurations, keyed by configuration id."""

    configurations: dict[str, Configuration] = field(default_factory=dict)

    def __contains__(self, config_id: str) -> bool:
        return config_id in self.configurations

    def __getitem__(self, config_id: str) -> Configuration:
        return self.configurations[config_id]

    def __len__(self) -> int:
        return len(self.configurations)

    def ids(self) -> list[str]:
        return list(self.configurations)
