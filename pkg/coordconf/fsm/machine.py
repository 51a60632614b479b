"""Hierarchical state machine executing a StatechartSpec.

The machine only raises events. It holds no reference to components or
to the configurator; the caller routes raised events onward.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

from coordconf.events import Event
from coordconf.fsm.spec import StatechartSpec, TimerSpec, TransitionSpec

logger = logging.getLogger(__name__)

PATH_SEPARATOR = "/"


@dataclass
class _ArmedTimer:
    state: str
    timer: TimerSpec
    remaining: int


@dataclass
class StepResult:
    """Outcome of dispatching one event."""

    event: Event
    transition: Optional[TransitionSpec] = None
    source_path: str = ""
    target_path: str = ""
    raised: list[Event] = field(default_factory=list)

    @property
    def fired(self) -> bool:
        return self.transition is not None


class Statechart:
    """Active configuration of a chart: the root-to-leaf path plus armed timers."""

    def __init__(self, spec: StatechartSpec):
        self.spec = spec
        self._active: list[str] = []
        self._timers: list[_ArmedTimer] = []

    @property
    def active(self) -> list[str]:
        return list(self._active)

    @property
    def active_path(self) -> str:
        """Active states joined with ``/``, e.g. ``copying/five_DOF_mode``."""
        return PATH_SEPARATOR.join(self._active)

    @property
    def started(self) -> bool:
        return bool(self._active)

    def init(self) -> list[Event]:
        """Enter the initial configuration; entry raises fire outermost-first."""
        self._active = []
        self._timers = []
        raised: list[Event] = []
        for state_id in [self.spec.initial] + self.spec.initial_descent(self.spec.initial):
            self._enter(state_id, raised)
        logger.debug(f"{self.spec.name}: initialized in {self.active_path}")
        return raised

    def dispatch(self, event: Event) -> StepResult:
        """Process one event and report the transition taken, if any.

        The deepest active state with a transition on the event wins;
        among transitions of one state, the first declared wins.
        """
        self._require_started()
        transition = self._select(event.name)
        result = StepResult(event=event, source_path=self.active_path)
        if transition is None:
            result.target_path = result.source_path
            return result

        raised: list[Event] = []
        lca = self._lca(transition.source, transition.target)
        depth = 0 if lca is None else self._active.index(lca) + 1

        for state_id in reversed(self._active[depth:]):
            self._exit(state_id, raised)
        self._active = self._active[:depth]

        target_path = self.spec.path_to(transition.target)
        for state_id in target_path[depth:] + self.spec.initial_descent(transition.target):
            self._enter(state_id, raised)

        result.transition = transition
        result.target_path = self.active_path
        result.raised = raised
        logger.debug(f"{self.spec.name}: {result.source_path} -> {result.target_path} on {event.name}")
        return result

    def step(self, event: Event) -> list[Event]:
        """Process one event; return the events raised by exit and entry."""
        return self.dispatch(event).raised

    def tick(self, dt_ms: int) -> list[Event]:
        """Advance armed timers by ``dt_ms``; return events of expired timers.

        Each timer fires at most once per entry of its state. Timers
        expiring in the same tick fire in deadline order, ties broken by
        arming order.
        """
        self._require_started()
        if dt_ms < 0:
            raise ValueError(f"Negative tick: {dt_ms}")
        expired: list[tuple[int, int, _ArmedTimer]] = []
        for index, armed in enumerate(self._timers):
            armed.remaining -= dt_ms
            if armed.remaining <= 0:
                expired.append((armed.remaining, index, armed))
        if not expired:
            return []
        fired = {id(armed) for _, _, armed in expired}
        self._timers = [armed for armed in self._timers if id(armed) not in fired]
        raised = []
        for _, _, armed in sorted(expired, key=lambda item: item[:2]):
            logger.debug(f"{self.spec.name}: timer of {armed.state} expired")
            raised.extend(Event(name, source=armed.state) for name in armed.timer.events)
        return raised

    def next_deadline(self) -> Optional[int]:
        """Milliseconds until the nearest armed timer expires, or None."""
        if not self._timers:
            return None
        return min(armed.remaining for armed in self._timers)

    def _require_started(self) -> None:
        if not self._active:
            raise RuntimeError(f"Statechart {self.spec.name} is not initialized")

    def _select(self, event_name: str) -> Optional[TransitionSpec]:
        for state_id in reversed(self._active):
            for transition in self.spec.transitions_from(state_id):
                if transition.event == event_name:
                    return transition
        return None

    def _lca(self, source: str, target: str) -> Optional[str]:
        """Deepest common proper ancestor of source and target, None for the chart root."""
        source_ancestors = self.spec.path_to(source)[:-1]
        target_ancestors = self.spec.path_to(target)[:-1]
        lca = None
        for a, b in zip(source_ancestors, target_ancestors):
            if a != b:
                break
            lca = a
        return lca

    def _enter(self, state_id: str, raised: list[Event]) -> None:
        state = self.spec.states[state_id]
        self._active.append(state_id)
        raised.extend(Event(name, source=state_id) for name in state.entry)
        self._timers.extend(_ArmedTimer(state_id, timer, timer.delay_ms) for timer in state.timers)

    def _exit(self, state_id: str, raised: list[Event]) -> None:
        state = self.spec.states[state_id]
        raised.extend(Event(name, source=state_id) for name in state.exit)
        self._timers = [armed for armed in self._timers if armed.state != state_id]


def fsm_init(spec: StatechartSpec) -> tuple[Statechart, list[Event]]:
    """Create a machine for ``spec`` and enter its initial configuration."""
    chart = Statechart(spec)
    return chart, chart.init()


def fsm_step(chart: Statechart, event: Event) -> list[Event]:
    return chart.step(event)


def fsm_tick(chart: Statechart, dt_ms: int) -> list[Event]:
    return chart.tick(dt_ms)
