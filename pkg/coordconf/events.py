"""Events: the only coupling between monitors, coordinator and configurator."""

import re
from dataclasses import dataclass
from typing import Optional

from coordconf.values import Value, format_value, make_value

EVENT_NAME_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_.:]*$")


def is_valid_event_name(name: str) -> bool:
    """Check an event name against the allowed pattern."""
    return bool(EVENT_NAME_PATTERN.match(name))


@dataclass(frozen=True)
class Event:
    """A named signal with an optional payload."""

    name: str
    payload: Optional[Value] = None
    source: str = ""

    def __post_init__(self):
        if not is_valid_event_name(self.name):
            raise ValueError(f"Invalid event name: {self.name!r}")
        if self.payload is not None:
            object.__setattr__(self, "payload", make_value(self.payload))

    def __str__(self) -> str:
        if self.payload is None:
            return self.name
        return f"{self.name}({format_value(self.payload)})"
