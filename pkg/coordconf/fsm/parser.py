"""Parser for the ``.fsm`` statechart format::

    fsm youbot {
        initial unsync;
        state copying {
            entry raise enable_copying;
            exit raise disable_copying;
            initial five_DOF_mode;
            state five_DOF_mode { entry raise five_DOF; }
        }
        transition unsync -> sync on e_comm_ok;
    }

Raise lists may only name events. A configuration change or an action
call in a raise list is rejected, which keeps the coordinator pure.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from lark import Token, Transformer
from lark.exceptions import UnexpectedInput

from coordconf.diagnostics import ParseDiagnostic, has_errors
from coordconf.dsl.grammar import fsm_parser
from coordconf.dsl.model import ChangeKind
from coordconf.dsl.parser import diagnostic_from_lark
from coordconf.errors import ModelFileError
from coordconf.fsm.spec import StatechartSpec, StateSpec, TimerSpec, TransitionSpec

logger = logging.getLogger(__name__)

_CHANGE_NAMES = frozenset(kind.value for kind in ChangeKind)


@dataclass
class _RawRaise:
    name: Token
    call: Optional[str]


@dataclass
class _RawMember:
    kind: str  # initial | entry | exit | after | transition
    line: int
    column: int
    names: list
    delay: int = 0


@dataclass
class _RawState:
    name: Token
    members: list


class _FsmTransformer(Transformer):
    def start(self, children):
        name, *members = children
        return name, members

    def initial_decl(self, children):
        (name,) = children
        return _RawMember("initial", name.line, name.column, [name])

    def state_decl(self, children):
        name, *members = children
        return _RawState(name, members)

    def transition_decl(self, children):
        source, target, event = children
        return _RawMember("transition", source.line, source.column, [source, target, event])

    def entry_decl(self, children):
        return self._raises("entry", children[0])

    def exit_decl(self, children):
        return self._raises("exit", children[0])

    def after_decl(self, children):
        delay, items = children
        member = self._raises("after", items)
        member.delay = int(delay)
        return member

    @staticmethod
    def _raises(kind: str, items: list) -> _RawMember:
        first = items[0].name
        return _RawMember(kind, first.line, first.column, items)

    def raise_list(self, items):
        return list(items)

    def raise_item(self, children):
        name = children[0]
        call = children[1] if len(children) > 1 else None
        return _RawRaise(name, call)

    def call(self, children):
        return str(children[0]).strip() if children else ""


class _ChartBuilder:
    """Collects states and transitions from the raw tree, reporting problems."""

    def __init__(self):
        self.states: dict[str, StateSpec] = {}
        self.transitions: list[TransitionSpec] = []
        self.diagnostics: list[ParseDiagnostic] = []

    def error(self, line: int, column: int, message: str) -> None:
        self.diagnostics.append(ParseDiagnostic.error(line, column, message))

    def event_names(self, member: _RawMember) -> tuple[str, ...]:
        names = []
        for item in member.names:
            name = str(item.name)
            if name in _CHANGE_NAMES:
                self.error(
                    item.name.line, item.name.column,
                    f"{member.kind} raises {name}, a configuration change; raise lists may only name events",
                )
            elif item.call is not None:
                self.error(
                    item.name.line, item.name.column,
                    f"{member.kind} raises {name}({item.call}), an action call; raise lists may only name events",
                )
            else:
                names.append(name)
        return tuple(names)

    def scope(self, members: list, parent: Optional[StateSpec]) -> tuple[Optional[Token], list[str]]:
        """Process one nesting level. Returns its initial declaration and child ids."""
        initial: Optional[Token] = None
        children: list[str] = []
        for member in members:
            if isinstance(member, _RawState):
                child_id = self.state(member, parent)
                if child_id is not None:
                    children.append(child_id)
                continue

            if member.kind == "initial":
                if initial is not None:
                    self.error(member.line, member.column, "more than one initial declaration at this level")
                else:
                    initial = member.names[0]
            elif member.kind == "transition":
                source, target, event = (str(t) for t in member.names)
                self.transitions.append(TransitionSpec(source, target, event, member.line))
            elif parent is None:
                self.error(member.line, member.column, f"{member.kind} is only allowed inside a state")
            elif member.kind == "entry":
                parent.entry += self.event_names(member)
            elif member.kind == "exit":
                parent.exit += self.event_names(member)
            elif member.delay <= 0:
                self.error(member.line, member.column, "after delay must be a positive number of milliseconds")
            else:
                timer = TimerSpec(member.delay, self.event_names(member), member.line)
                parent.timers += (timer,)
        return initial, children

    def state(self, raw: _RawState, parent: Optional[StateSpec]) -> Optional[str]:
        state_id = str(raw.name)
        if state_id in self.states:
            self.error(raw.name.line, raw.name.column, f"duplicate state id: {state_id}")
            return None
        state = StateSpec(id=state_id, parent=parent.id if parent else None, line=raw.name.line)
        self.states[state_id] = state
        initial, children = self.scope(raw.members, state)
        state.children = children
        if initial is None:
            if children:
                self.error(raw.name.line, raw.name.column, f"composite state {state_id} declares no initial state")
        elif str(initial) not in children:
            self.error(initial.line, initial.column, f"initial state {initial} is not a child of {state_id}")
        else:
            state.initial = str(initial)
        return state_id


def parse_statechart(text: str) -> tuple[Optional[StatechartSpec], list[ParseDiagnostic]]:
    """Parse and validate ``.fsm`` text.

    Args:
        text: Contents of a .fsm file

    Returns:
        Tuple of (spec, diagnostics); spec is None when there are errors
    """
    parser = fsm_parser()
    try:
        tree = parser.parse(text)
    except UnexpectedInput as e:
        return None, [diagnostic_from_lark(e, text, parser)]

    name, members = _FsmTransformer().transform(tree)
    builder = _ChartBuilder()
    initial, top = builder.scope(members, None)

    if not top:
        builder.error(name.line, name.column, f"chart {name} declares no states")
    elif initial is None:
        builder.error(name.line, name.column, f"chart {name} declares no initial state")
    elif str(initial) not in top:
        builder.error(initial.line, initial.column, f"initial state {initial} is not a top-level state")

    for transition in builder.transitions:
        for ref in (transition.source, transition.target):
            if ref not in builder.states:
                builder.error(transition.line, 1, f"transition {transition} references unknown state {ref}")

    if has_errors(builder.diagnostics):
        return None, sorted(builder.diagnostics, key=lambda d: (d.line, d.column))

    spec = StatechartSpec(
        name=str(name),
        states=builder.states,
        transitions=builder.transitions,
        initial=str(initial),
        top=top,
    )
    logger.debug(f"Parsed chart {spec.name}: {len(spec.states)} states, {len(spec.transitions)} transitions")
    return spec, builder.diagnostics


def load_statechart(path: Union[str, Path]) -> StatechartSpec:
    """Read and parse a .fsm file.

    Raises:
        ModelFileError: If the file has errors
    """
    path = Path(path)
    spec, diagnostics = parse_statechart(path.read_text(encoding="utf-8"))
    if spec is None:
        raise ModelFileError(f"Invalid statechart: {path}", diagnostics, str(path))
    return spec
