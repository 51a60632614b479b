"""Pure coordinator: hierarchical statecharts that only raise events."""

from coordconf.fsm.machine import Statechart, StepResult, fsm_init, fsm_step, fsm_tick
from coordconf.fsm.parser import load_statechart, parse_statechart
from coordconf.fsm.spec import StatechartSpec, StateSpec, TimerSpec, TransitionSpec

__all__ = [
    "StateSpec",
    "Statechart",
    "StatechartSpec",
    "StepResult",
    "TimerSpec",
    "TransitionSpec",
    "fsm_init",
    "fsm_step",
    "fsm_tick",
    "load_statechart",
    "parse_statechart",
]
