"""Parser for the Configurator DSL.

Configurations are written as nested Lua-style tables::

    ConfiguratorConf {
        five_DOF = Configuration {
            pre_conf_state = { 'Dynamics:running' },
            property_set("Dynamics.force_gain", {0, 0, 0}),
        },
    }
"""

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

from lark import Lark, Token, Transformer
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken

from coordconf.diagnostics import ParseDiagnostic, has_errors
from coordconf.dsl.grammar import conf_parser
from coordconf.dsl.model import (
    DEFAULT_SUBJECT,
    Change,
    ChangeKind,
    Configuration,
    ConfiguratorConf,
    LifecycleSpecEntry,
)
from coordconf.errors import ModelFileError
from coordconf.runtime.component import LifecycleState
from coordconf.values import make_value, parse_number, unquote

logger = logging.getLogger(__name__)

CONFIG_ID_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
DOTTED_PATTERN = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*\.[A-Za-z_][A-Za-z0-9_]*$")
COMPONENT_ID_PATTERN = CONFIG_ID_PATTERN

# Lifecycle targets accepted in pre/post lists
LIFECYCLE_TARGETS = {
    "preoperational": LifecycleState.PRE_OPERATIONAL,
    "stopped": LifecycleState.STOPPED,
    "configure": LifecycleState.STOPPED,
    "running": LifecycleState.RUNNING,
}


@dataclass
class InvalidValue:
    """Placeholder for a literal that is well-formed but not a Value."""

    message: str


@dataclass
class _RawState:
    subject: str
    target: str
    line: int
    column: int


@dataclass
class _RawChange:
    kind: str
    target: str
    args: list
    line: int
    column: int


@dataclass
class _RawSpec:
    which: str
    entries: list
    line: int
    column: int


class _ConfTransformer(Transformer):
    """Turns the parse tree into raw nodes carrying source positions."""

    def start(self, entries):
        return entries

    def entry(self, children):
        name, items = children
        return name, items

    def configuration(self, items):
        return list(items)

    def prespec(self, children):
        (entries,) = children
        return _RawSpec("pre", entries, *self._spec_pos(entries))

    def postspec(self, children):
        (entries,) = children
        return _RawSpec("post", entries, *self._spec_pos(entries))

    @staticmethod
    def _spec_pos(entries):
        if entries:
            return entries[0].line, entries[0].column
        return 0, 0

    def statelist(self, entries):
        return list(entries)

    def state_string(self, children):
        (token,) = children
        subject, sep, target = unquote(token).partition(":")
        return _RawState(subject.strip(), target.strip() if sep else "", token.line, token.column)

    def state_pair(self, children):
        name, token = children
        return _RawState(str(name), unquote(token).strip(), name.line, name.column)

    def change(self, children):
        kind, target, *args = children
        return _RawChange(str(kind), unquote(target), args, kind.line, kind.column)

    def true(self, _):
        return True

    def false(self, _):
        return False

    def number(self, children):
        try:
            return parse_number(children[0])
        except ValueError as e:
            return InvalidValue(str(e))

    def string(self, children):
        return unquote(children[0])

    def array(self, items):
        bad = next((i for i in items if isinstance(i, (InvalidValue, tuple))), None)
        if isinstance(bad, InvalidValue):
            return bad
        if bad is not None:
            return InvalidValue("nested arrays are not values")
        try:
            return make_value(list(items))
        except TypeError as e:
            return InvalidValue(str(e))


def _expected_text(parser: Lark, names: set) -> str:
    shown = []
    for name in sorted(names):
        try:
            pattern = parser.get_terminal(name).pattern
            shown.append(f"'{pattern.value}'" if pattern.type == "str" else name)
        except KeyError:
            shown.append(name)
    return ", ".join(shown)


def diagnostic_from_lark(error: UnexpectedInput, text: str, parser: Lark) -> ParseDiagnostic:
    """Convert a lark error into a diagnostic with a 1-based position."""
    line = getattr(error, "line", None)
    column = getattr(error, "column", None)
    if not isinstance(line, int) or line < 1:
        line = max(1, text.count("\n") + (0 if text.endswith("\n") else 1))
        column = 1
    if not isinstance(column, int) or column < 1:
        column = 1

    if isinstance(error, UnexpectedCharacters):
        char = getattr(error, "char", "?")
        message = f"unexpected character {char!r}"
    elif isinstance(error, UnexpectedToken) and error.token.type != "$END":
        message = f"unexpected {error.token.value!r}, expected {_expected_text(parser, error.expected)}"
    elif isinstance(error, (UnexpectedToken, UnexpectedEOF)):
        message = f"unexpected end of input (unbalanced braces?), expected {_expected_text(parser, error.expected)}"
    else:
        message = str(error).splitlines()[0]
    return ParseDiagnostic.error(line, column, message)


def _state_entries(
    spec: _RawSpec, diagnostics: list[ParseDiagnostic]
) -> tuple[LifecycleSpecEntry, ...]:
    entries = []
    for raw in spec.entries:
        if raw.subject != DEFAULT_SUBJECT and not COMPONENT_ID_PATTERN.match(raw.subject):
            diagnostics.append(ParseDiagnostic.error(raw.line, raw.column, f"Invalid component id in {spec.which}_conf_state: {raw.subject!r}"))
            continue
        target = LIFECYCLE_TARGETS.get(raw.target.lower())
        if target is None:
            diagnostics.append(
                ParseDiagnostic.error(
                    raw.line, raw.column,
                    f"Invalid lifecycle target {raw.target!r} for {raw.subject}; "
                    f"expected one of {', '.join(LIFECYCLE_TARGETS)}",
                )
            )
            continue
        entries.append(LifecycleSpecEntry(raw.subject, target, raw.line))
    return tuple(entries)


def _check_change(raw: _RawChange) -> Optional[str]:
    """Return a problem description for a malformed change, or None."""
    try:
        kind = ChangeKind(raw.kind)
    except ValueError:
        return f"Unknown change kind: {raw.kind}"

    for arg in raw.args:
        if isinstance(arg, InvalidValue):
            return f"Invalid value in {raw.kind}: {arg.message}"

    if kind.is_dotted and not DOTTED_PATTERN.match(raw.target):
        return f"{raw.kind} target must be 'component.name', got {raw.target!r}"
    if kind in (ChangeKind.PROPERTY_SET, ChangeKind.PORT_WRITE) and len(raw.args) != 1:
        return f"{raw.kind} takes exactly one value, got {len(raw.args)}"
    if kind in (ChangeKind.CONNECTION_CREATE, ChangeKind.CONNECTION_REMOVE):
        if len(raw.args) != 1 or not isinstance(raw.args[0], str):
            return f"{raw.kind} takes exactly two endpoint strings"
        for endpoint in (raw.target, raw.args[0]):
            if not DOTTED_PATTERN.match(endpoint):
                return f"{raw.kind} endpoint must be 'component.port', got {endpoint!r}"
    if kind is ChangeKind.COMPONENT_CREATE:
        if len(raw.args) != 1 or not isinstance(raw.args[0], str):
            return "component_create takes a component id and a type name"
    if kind is ChangeKind.COMPONENT_DESTROY and raw.args:
        return "component_destroy takes only a component id"
    if kind in (ChangeKind.COMPONENT_CREATE, ChangeKind.COMPONENT_DESTROY) and not COMPONENT_ID_PATTERN.match(raw.target):
        return f"Invalid component id: {raw.target!r}"
    return None


def _build_configuration(
    name: Token, items: list, diagnostics: list[ParseDiagnostic]
) -> Configuration:
    pre: tuple[LifecycleSpecEntry, ...] = ()
    post: tuple[LifecycleSpecEntry, ...] = ()
    seen_specs: set[str] = set()
    changes: list[Change] = []

    for item in items:
        if isinstance(item, _RawSpec):
            if item.which in seen_specs:
                line = item.line or name.line
                diagnostics.append(ParseDiagnostic.error(line, item.column or 1, f"Configuration {name} declares {item.which}_conf_state twice"))
                continue
            seen_specs.add(item.which)
            entries = _state_entries(item, diagnostics)
            if item.which == "pre":
                pre = entries
            else:
                post = entries
        else:
            problem = _check_change(item)
            if problem:
                diagnostics.append(ParseDiagnostic.error(item.line, item.column, problem))
                continue
            changes.append(Change(ChangeKind(item.kind), item.target, tuple(item.args), item.line))

    return Configuration(pre=pre, post=post, changes=tuple(changes), line=name.line)


def parse_configurator_conf(text: str) -> tuple[Optional[ConfiguratorConf], list[ParseDiagnostic]]:
    """Parse Configurator DSL text.

    Args:
        text: Contents of a .conf file

    Returns:
        Tuple of (conf, diagnostics). ``conf`` is None when any error
        diagnostic was produced.
    """
    parser = conf_parser()
    try:
        tree = parser.parse(text)
    except UnexpectedInput as e:
        diagnostic = diagnostic_from_lark(e, text, parser)
        logger.debug(f"Parse error: {diagnostic.format()}")
        return None, [diagnostic]

    diagnostics: list[ParseDiagnostic] = []
    configurations: dict[str, Configuration] = {}
    for name, items in _ConfTransformer().transform(tree):
        config_id = str(name)
        if not CONFIG_ID_PATTERN.match(config_id):
            diagnostics.append(ParseDiagnostic.error(name.line, name.column, f"Invalid configuration id: {config_id!r}"))
            continue
        if config_id in configurations:
            diagnostics.append(ParseDiagnostic.error(name.line, name.column, f"Duplicate configuration id: {config_id}"))
            continue
        configurations[config_id] = _build_configuration(name, items, diagnostics)

    if has_errors(diagnostics):
        return None, diagnostics
    return ConfiguratorConf(configurations), diagnostics


def load_configurator_conf(path: Union[str, Path]) -> ConfiguratorConf:
    """Read and parse a .conf file.

    Raises:
        ModelFileError: If the file does not parse
    """
    path = Path(path)
    conf, diagnostics = parse_configurator_conf(path.read_text(encoding="utf-8"))
    if conf is None:
        raise ModelFileError(f"Invalid configuration file: {path}", diagnostics, str(path))
    return conf


