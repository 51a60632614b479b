"""Programmable monitors: observe registry state and raise events."""

import logging
import operator
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from coordconf.errors import AbsentValue, MonitorError, UnknownComponent, UnknownPort, UnknownTarget
from coordconf.events import Event, is_valid_event_name
from coordconf.runtime.registry import ComponentRegistry
from coordconf.values import Value, format_value, is_numeric, norm, values_match

logger = logging.getLogger(__name__)


class Comparison(str, Enum):
    LT = "lt"
    LE = "le"
    GT = "gt"
    GE = "ge"
    EQ = "eq"

    @classmethod
    def parse(cls, text: str) -> "Comparison":
        """Parse ``lt`` or ``<`` style comparison names."""
        symbols = {"<": cls.LT, "<=": cls.LE, ">": cls.GT, ">=": cls.GE, "==": cls.EQ}
        if text in symbols:
            return symbols[text]
        return cls(text.lower())


_ORDERING: dict[Comparison, Callable[[float, float], bool]] = {
    Comparison.LT: operator.lt,
    Comparison.LE: operator.le,
    Comparison.GT: operator.gt,
    Comparison.GE: operator.ge,
}


@dataclass(frozen=True)
class MonitorSpec:
    """Declaration of a monitor.

    Numeric arrays are compared through their Euclidean norm.
    """

    id: str
    target: str
    comparison: Comparison
    threshold: Value
    event: str
    edge: bool = False

    def __post_init__(self):
        if not is_valid_event_name(self.event):
            raise MonitorError(f"Monitor {self.id}: invalid event name {self.event!r}")
        if self.comparison is not Comparison.EQ and not is_numeric(self.threshold):
            raise MonitorError(
                f"Monitor {self.id}: {self.comparison.value} needs a numeric threshold, "
                f"got {format_value(self.threshold)}"
            )

    def holds(self, value: Value) -> bool:
        """Evaluate the predicate against a value."""
        if self.comparison is Comparison.EQ:
            if is_numeric(value) and is_numeric(self.threshold):
                return norm(value) == norm(self.threshold)
            return values_match(self.threshold, value)
        if not is_numeric(value):
            return False
        return _ORDERING[self.comparison](norm(value), norm(self.threshold))

    def __str__(self) -> str:
        trigger = " edge" if self.edge else ""
        return (
            f"monitor {self.id} watch {self.target} when {self.comparison.value} "
            f"{format_value(self.threshold)} emit {self.event}{trigger}"
        )


class RegistryView:
    """Read-only access to the registry for monitors."""

    def __init__(self, registry: ComponentRegistry):
        self._registry = registry

    def read(self, target: str) -> Optional[Value]:
        """Read a port or property value (None if a port was never written).

        Raises:
            UnknownTarget: If the component, port or property does not exist
        """
        try:
            return self._registry.read(target)
        except (UnknownComponent, UnknownPort):
            raise UnknownTarget(target) from None


@dataclass
class Monitor:
    """A monitor instance with its trigger memory."""

    spec: MonitorSpec
    last_result: bool = field(default=False, init=False)
    fired: int = field(default=0, init=False)

    def evaluate(self, view: RegistryView) -> Optional[Event]:
        """Evaluate once and return the event to raise, if any.

        Edge-triggered monitors fire on false -> true transitions only;
        level-triggered monitors fire on every evaluation while true. An
        absent value counts as false.

        Raises:
            UnknownTarget: If the watched target does not exist
        """
        try:
            value = view.read(self.spec.target)
            if value is None:
                raise AbsentValue(self.spec.target)
            result = self.spec.holds(value)
        except AbsentValue:
            logger.debug(f"monitor {self.spec.id}: {self.spec.target} has no value yet")
            result = False

        previous, self.last_result = self.last_result, result
        if not result or (self.spec.edge and previous):
            return None
        self.fired += 1
        logger.debug(f"monitor {self.spec.id} fired {self.spec.event}")
        return Event(self.spec.event, source=f"monitor:{self.spec.id}")


def monitor_eval(monitor: Monitor, registry: ComponentRegistry) -> Optional[Event]:
    """Evaluate a monitor against the registry through a read-only view."""
    return monitor.evaluate(RegistryView(registry))
