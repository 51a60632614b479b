"""Scenario scripts: timed injections, sensor writes and expectations.

::

    # youBot coupling
    @10 inject e_comm_ok
    @25 write Cart_Impedance.desired_force {0.1, 0.1, 0.1}
    @30 expect fsm copying/five_DOF_mode
    @30 expect port Cart_Impedance.ext_ref_mode == true
    @30 expect event conf.applied.enable_copying
"""

import logging
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Union

from coordconf.diagnostics import ParseDiagnostic, has_errors
from coordconf.errors import ModelFileError
from coordconf.events import is_valid_event_name
from coordconf.runtime.component import LifecycleState
from coordconf.values import Value, format_value, parse_literal

logger = logging.getLogger(__name__)

_ID = r"[A-Za-z_][A-Za-z0-9_]*"
_EVENT = r"[A-Za-z_][A-Za-z0-9_.:]*"

DIRECTIVE_PATTERN = re.compile(r"^@(?P<time>\d+)\s+(?P<verb>\S+)\s*(?P<rest>.*)$")
INJECT_PATTERN = re.compile(rf"^(?P<event>{_EVENT})(?:\s+(?P<payload>.+))?$")
WRITE_PATTERN = re.compile(rf"^(?P<target>{_ID}\.{_ID})\s+(?P<literal>.+)$")
EXPECT_PATTERNS: dict[str, re.Pattern] = {
    "fsm": re.compile(rf"^(?P<path>{_ID}(?:/{_ID})*)$"),
    "lifecycle": re.compile(rf"^(?P<component>{_ID})\s+(?P<state>\S+)$"),
    "prop": re.compile(rf"^(?P<target>{_ID}\.{_ID})\s*==\s*(?P<literal>.+)$"),
    "port": re.compile(rf"^(?P<target>{_ID}\.{_ID})\s*==\s*(?P<literal>.+)$"),
    "event": re.compile(rf"^(?P<event>{_EVENT})$"),
    "no-event": re.compile(rf"^(?P<event>{_EVENT})$"),
}


class DirectiveKind(str, Enum):
    INJECT = "inject"
    WRITE = "write"
    EXPECT = "expect"


class ExpectKind(str, Enum):
    FSM = "fsm"
    LIFECYCLE = "lifecycle"
    PROP = "prop"
    PORT = "port"
    EVENT = "event"
    NO_EVENT = "no-event"


@dataclass(frozen=True)
class Directive:
    """One timed line of a scenario.

    ``subject`` is the event name, the written or expected target, the
    expected state path or the component id, depending on the kind.
    """

    time: int
    kind: DirectiveKind
    subject: str
    expect: Optional[ExpectKind] = None
    value: Optional[Value] = None
    state: Optional[LifecycleState] = None
    line: int = 0

    def __str__(self) -> str:
        if self.kind is DirectiveKind.INJECT:
            payload = "" if self.value is None else f" {format_value(self.value)}"
            return f"inject {self.subject}{payload}"
        if self.kind is DirectiveKind.WRITE:
            return f"write {self.subject} {format_value(self.value)}"
        if self.expect in (ExpectKind.PROP, ExpectKind.PORT):
            return f"expect {self.expect.value} {self.subject} == {format_value(self.value)}"
        if self.expect is ExpectKind.LIFECYCLE:
            return f"expect lifecycle {self.subject} {self.state.value}"
        return f"expect {self.expect.value} {self.subject}"


@dataclass(frozen=True)
class ScenarioScript:
    directives: tuple[Directive, ...] = ()

    @property
    def end_time(self) -> int:
        return self.directives[-1].time if self.directives else 0

    def times(self) -> list[int]:
        """Distinct directive times, ascending."""
        return sorted({d.time for d in self.directives})

    def at(self, time: int) -> list[Directive]:
        return [d for d in self.directives if d.time == time]


def _parse_directive(time: int, verb: str, rest: str, line: int) -> Directive:
    """Build one directive; raises ValueError describing what is wrong."""
    if verb == "inject":
        match = INJECT_PATTERN.match(rest)
        if not match:
            raise ValueError(f"inject needs an event name, got {rest!r}")
        payload = match.group("payload")
        value = parse_literal(payload) if payload else None
        return Directive(time, DirectiveKind.INJECT, match.group("event"), value=value, line=line)

    if verb == "write":
        match = WRITE_PATTERN.match(rest)
        if not match:
            raise ValueError(f"write needs 'comp.port <literal>', got {rest!r}")
        value = parse_literal(match.group("literal"))
        return Directive(time, DirectiveKind.WRITE, match.group("target"), value=value, line=line)

    if verb == "expect":
        what, _, body = rest.partition(" ")
        try:
            expect = ExpectKind(what)
        except ValueError:
            raise ValueError(
                f"unknown expectation {what!r}; expected one of {', '.join(k.value for k in ExpectKind)}"
            ) from None
        match = EXPECT_PATTERNS[expect.value].match(body.strip())
        if not match:
            raise ValueError(f"malformed 'expect {expect.value}': {body.strip()!r}")
        if expect is ExpectKind.FSM:
            return Directive(time, DirectiveKind.EXPECT, match.group("path"), expect=expect, line=line)
        if expect is ExpectKind.LIFECYCLE:
            state = LifecycleState.parse(match.group("state"))
            return Directive(time, DirectiveKind.EXPECT, match.group("component"), expect=expect, state=state, line=line)
        if expect in (ExpectKind.PROP, ExpectKind.PORT):
            value = parse_literal(match.group("literal"))
            return Directive(time, DirectiveKind.EXPECT, match.group("target"), expect=expect, value=value, line=line)
        return Directive(time, DirectiveKind.EXPECT, match.group("event"), expect=expect, line=line)

    raise ValueError(f"unknown directive {verb!r}; expected inject, write or expect")


def parse_scenario(text: str) -> tuple[Optional[ScenarioScript], list[ParseDiagnostic]]:
    """Parse a scenario script.

    Returns:
        Tuple of (script, diagnostics); script is None when there are errors
    """
    directives: list[Directive] = []
    diagnostics: list[ParseDiagnostic] = []
    last_time = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        column = len(raw) - len(raw.lstrip()) + 1
        match = DIRECTIVE_PATTERN.match(line)
        if not match:
            diagnostics.append(ParseDiagnostic.error(lineno, column, f"expected '@<ms> <directive>', got {line!r}"))
            continue

        time = int(match.group("time"))
        if time < last_time:
            diagnostics.append(
                ParseDiagnostic.error(lineno, column, f"time {time} goes backwards (previous directive at {last_time})")
            )
            continue
        try:
            directive = _parse_directive(time, match.group("verb"), match.group("rest").strip(), lineno)
        except ValueError as e:
            diagnostics.append(ParseDiagnostic.error(lineno, column, str(e)))
            continue
        if directive.kind is DirectiveKind.INJECT and not is_valid_event_name(directive.subject):
            diagnostics.append(ParseDiagnostic.error(lineno, column, f"invalid event name {directive.subject!r}"))
            continue
        last_time = time
        directives.append(directive)

    if has_errors(diagnostics):
        return None, diagnostics
    return ScenarioScript(tuple(directives)), diagnostics


def load_scenario(path: Union[str, Path]) -> ScenarioScript:
    """Read and parse a scenario file.

    Raises:
        ModelFileError: If the file has errors
    """
    path = Path(path)
    script, diagnostics = parse_scenario(path.read_text(encoding="utf-8"))
    if script is None:
        raise ModelFileError(f"Invalid scenario: {path}", diagnostics, str(path))
    logger.debug(f"Loaded scenario {path}: {len(script.directives)} directives")
    return script
