"""Statechart model: a tree of states plus event-triggered transitions."""

from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class TimerSpec:
    """``after <delay_ms> raise <events>``, armed when the owning state is entered."""

    delay_ms: int
    events: tuple[str, ...]
    line: int = field(default=0, compare=False)


@dataclass
class StateSpec:
    id: str
    parent: Optional[str] = None
    children: list[str] = field(default_factory=list)
    initial: Optional[str] = None
    entry: tuple[str, ...] = ()
    exit: tuple[str, ...] = ()
    timers: tuple[TimerSpec, ...] = ()
    line: int = 0


@dataclass(frozen=True)
class TransitionSpec:
    source: str
    target: str
    event: str
    line: int = field(default=0, compare=False)

    def __str__(self) -> str:
        return f"{self.source} -> {self.target} on {self.event}"


@dataclass
class StatechartSpec:
    """A validated chart.

    State ids are unique across the whole chart, so a state is addressed
    by its id alone.
    """

    name: str
    states: dict[str, StateSpec]
    transitions: list[TransitionSpec]
    initial: str
    top: list[str] = field(default_factory=list)

    def path_to(self, state_id: str) -> list[str]:
        """State ids from the top level down to ``state_id`` inclusive."""
        path = []
        current: Optional[str] = state_id
        while current is not None:
            path.append(current)
            current = self.states[current].parent
        return path[::-1]

    def initial_descent(self, state_id: str) -> list[str]:
        """States entered below ``state_id`` by following initial children."""
        chain = []
        state = self.states[state_id]
        while state.initial is not None:
            chain.append(state.initial)
            state = self.states[state.initial]
        return chain

    def transitions_from(self, state_id: str) -> list[TransitionSpec]:
        return [t for t in self.transitions if t.source == state_id]
