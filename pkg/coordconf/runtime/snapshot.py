"""Immutable deep copies of all observable system state."""

from dataclasses import dataclass
from typing import Optional

from coordconf.runtime.component import Component, LifecycleState
from coordconf.values import Value, format_value, values_equal


@dataclass(frozen=True, order=True)
class Connection:
    """Data-flow connection from an out-port to an in-port (``comp.port`` form)."""

    source: str
    target: str

    def touches(self, component_id: str) -> bool:
        return (
            self.source.split(".", 1)[0] == component_id
            or self.target.split(".", 1)[0] == component_id
        )

    def __str__(self) -> str:
        return f"{self.source} -> {self.target}"


def _fmt(v: Optional[Value]) -> str:
    return "<absent>" if v is None else format_value(v)


def _items_equal(a: tuple, b: tuple) -> bool:
    if len(a) != len(b):
        return False
    return all(na == nb and values_equal(va, vb) for (na, va), (nb, vb) in zip(a, b))


@dataclass(frozen=True, eq=False)
class ComponentSnapshot:
    """State of one component at snapshot time."""

    id: str
    lifecycle: LifecycleState
    properties: tuple[tuple[str, Value], ...]
    in_ports: tuple[tuple[str, Optional[Value]], ...]
    out_ports: tuple[tuple[str, Optional[Value]], ...]

    @classmethod
    def of(cls, component: Component) -> "ComponentSnapshot":
        return cls(
            id=component.id,
            lifecycle=component.lifecycle,
            properties=tuple(sorted(component.properties.items())),
            in_ports=tuple(sorted(component.in_ports.items())),
            out_ports=tuple(sorted(component.out_ports.items())),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ComponentSnapshot):
            return NotImplemented
        return (
            self.id == other.id
            and self.lifecycle == other.lifecycle
            and _items_equal(self.properties, other.properties)
            and _items_equal(self.in_ports, other.in_ports)
            and _items_equal(self.out_ports, other.out_ports)
        )

    __hash__ = None

    def property_value(self, name: str) -> Value:
        return dict(self.properties)[name]

    def port_value(self, name: str) -> Optional[Value]:
        ports = dict(self.in_ports)
        ports.update(self.out_ports)
        return ports[name]


@dataclass(frozen=True, eq=False)
class SystemSnapshot:
    """Deep, immutable copy of the registry.

    Two snapshots are equal iff every field is equal under value equality.
    """

    components: tuple[ComponentSnapshot, ...]
    connections: frozenset[Connection]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SystemSnapshot):
            return NotImplemented
        return self.components == other.components and self.connections == other.connections

    __hash__ = None

    @property
    def component_ids(self) -> list[str]:
        return [c.id for c in self.components]

    def component(self, component_id: str) -> ComponentSnapshot:
        for c in self.components:
            if c.id == component_id:
                return c
        raise KeyError(component_id)

    def diff(self, other: "SystemSnapshot") -> list[str]:
        """Describe every difference between two snapshots, one line each."""
        lines: list[str] = []
        mine = {c.id: c for c in self.components}
        theirs = {c.id: c for c in other.components}
        for cid in sorted(mine.keys() - theirs.keys()):
            lines.append(f"component {cid} removed")
        for cid in sorted(theirs.keys() - mine.keys()):
            lines.append(f"component {cid} added")
        for cid in sorted(mine.keys() & theirs.keys()):
            a, b = mine[cid], theirs[cid]
            if a.lifecycle != b.lifecycle:
                lines.append(f"{cid} lifecycle {a.lifecycle.value} -> {b.lifecycle.value}")
            for label, xs, ys in (
                ("property", a.properties, b.properties),
                ("port", a.in_ports + a.out_ports, b.in_ports + b.out_ports),
            ):
                left, right = dict(xs), dict(ys)
                for name in sorted(left.keys() | right.keys()):
                    va, vb = left.get(name), right.get(name)
                    if name not in left or name not in right or not values_equal(va, vb):
                        lines.append(f"{label} {cid}.{name} {_fmt(va)} -> {_fmt(vb)}")
        for conn in sorted(self.connections - other.connections):
            lines.append(f"connection {conn} removed")
        for conn in sorted(other.connections - self.connections):
            lines.append(f"connection {conn} added")
        return lines
