"""Static checks on a parsed ConfiguratorConf."""

import logging
from collections import Counter
from typing import Iterable, Optional

from coordconf.diagnostics import ParseDiagnostic
from coordconf.dsl.model import (
    DEFAULT_SUBJECT,
    Change,
    ChangeKind,
    Configuration,
    ConfiguratorConf,
    LifecycleSpecEntry,
)
from coordconf.runtime.component import ComponentDeclarations
from coordconf.runtime.sysmodel import SystemModel

logger = logging.getLogger(__name__)


def _check_spec_list(
    config_id: str, which: str, entries: tuple[LifecycleSpecEntry, ...], line: int
) -> list[ParseDiagnostic]:
    diagnostics = []
    counts = Counter(e.subject for e in entries)
    for subject, count in counts.items():
        if count < 2:
            continue
        where = next((e.line for e in entries if e.subject == subject and e.line), line)
        if subject == DEFAULT_SUBJECT:
            message = f"{config_id}: {which}_conf_state has {count} _default entries"
        else:
            message = f"{config_id}: {which}_conf_state mentions {subject} {count} times"
        diagnostics.append(ParseDiagnostic.error(where, 1, message))
    return diagnostics


def port_write_overlaps(
    changes: Iterable[Change], connections: Iterable[tuple[str, str]] = ()
) -> list[tuple[Change, str, Change]]:
    """Port writes of one configuration that reach the same port.

    A write on an out-port also lands on every in-port connected to it,
    through ``connections`` or a connection_create of the same change set.
    Writes with the same literal target are left to check_conflicts.

    Returns:
        ``(change, port, earlier change)`` for each overlap, in change order
    """
    changes = list(changes)
    feeds: dict[str, set[str]] = {}
    for source, target in connections:
        feeds.setdefault(source, set()).add(target)
    for change in changes:
        if change.kind is ChangeKind.CONNECTION_CREATE:
            feeds.setdefault(change.target, set()).add(change.peer)

    reached: dict[str, Change] = {}
    overlaps = []
    for change in changes:
        if change.kind is not ChangeKind.PORT_WRITE:
            continue
        for port in [change.target, *sorted(feeds.get(change.target, ()))]:
            earlier = reached.setdefault(port, change)
            if earlier is not change and earlier.target != change.target:
                overlaps.append((change, port, earlier))
    return overlaps


def check_conflicts(
    config_id: str, config: Configuration, connections: Iterable[tuple[str, str]] = ()
) -> list[ParseDiagnostic]:
    """No two changes may target the same property or the same port.

    A port counts as targeted by a write on an out-port connected to it.

    Repeated operation calls are allowed but reported as warnings since
    their relative order is unspecified.
    """
    diagnostics = []
    seen: dict[tuple[ChangeKind, str], int] = {}
    for change in config.changes:
        if change.kind not in (ChangeKind.PROPERTY_SET, ChangeKind.PORT_WRITE, ChangeKind.OPERATION_CALL):
            continue
        key = (change.kind, change.target)
        if key not in seen:
            seen[key] = change.line
            continue
        if change.kind is ChangeKind.OPERATION_CALL:
            diagnostics.append(
                ParseDiagnostic.warning(
                    change.line, 1,
                    f"{config_id}: {change.target} called more than once; call order is unspecified",
                )
            )
        else:
            what = "property" if change.kind is ChangeKind.PROPERTY_SET else "port"
            diagnostics.append(
                ParseDiagnostic.error(
                    change.line, 1,
                    f"{config_id}: conflicting changes: {what} {change.target} "
                    f"is already changed on line {seen[key]}",
                )
            )
    for change, port, earlier in port_write_overlaps(config.changes, connections):
        diagnostics.append(
            ParseDiagnostic.error(
                change.line, 1,
                f"{config_id}: conflicting changes: port {port} is written through {change.target} "
                f"and through {earlier.target} on line {earlier.line}",
            )
        )
    return diagnostics


def _universe(conf: ConfiguratorConf, model: SystemModel) -> tuple[dict[str, ComponentDeclarations], list[ParseDiagnostic]]:
    """Components a configuration may refer to: the model's plus every created one."""
    known = {cid: model.declarations_for(cid) for cid in model.components}
    diagnostics = []
    for config_id, config in conf.configurations.items():
        for change in config.changes:
            if change.kind is not ChangeKind.COMPONENT_CREATE:
                continue
            type_name = str(change.args[0])
            if type_name not in model.types:
                diagnostics.append(
                    ParseDiagnostic.error(change.line, 1, f"{config_id}: unknown component type {type_name}")
                )
                continue
            known.setdefault(change.target, model.types[type_name])
    return known, diagnostics


def _check_against_model(
    config_id: str, config: Configuration, known: dict[str, ComponentDeclarations]
) -> list[ParseDiagnostic]:
    diagnostics = []

    def error(line: int, message: str) -> None:
        diagnostics.append(ParseDiagnostic.error(line or config.line, 1, f"{config_id}: {message}"))

    for entry in config.pre + config.post:
        if not entry.is_default and entry.subject not in known:
            error(entry.line, f"unknown component {entry.subject}")

    for change in config.changes:
        if change.kind is ChangeKind.COMPONENT_CREATE:
            continue
        if change.kind is ChangeKind.COMPONENT_DESTROY:
            if change.target not in known:
                error(change.line, f"unknown component {change.target}")
            continue

        endpoints = [change.target]
        if change.kind in (ChangeKind.CONNECTION_CREATE, ChangeKind.CONNECTION_REMOVE):
            endpoints.append(change.peer)
        for endpoint in endpoints:
            comp, _, name = endpoint.partition(".")
            decls = known.get(comp)
            if decls is None:
                error(change.line, f"unknown component {comp}")
                continue
            if change.kind is ChangeKind.PROPERTY_SET and name not in decls.properties:
                error(change.line, f"unknown property {endpoint}")
            elif change.kind is ChangeKind.PORT_WRITE and name not in decls.in_ports + decls.out_ports:
                error(change.line, f"unknown port {endpoint}")
            elif change.kind is ChangeKind.OPERATION_CALL:
                arity = decls.operations.get(name)
                if arity is None:
                    error(change.line, f"unknown operation {endpoint}")
                elif arity != len(change.args):
                    error(change.line, f"operation {endpoint} takes {arity} arguments, got {len(change.args)}")
            elif change.kind in (ChangeKind.CONNECTION_CREATE, ChangeKind.CONNECTION_REMOVE):
                ports = decls.out_ports if endpoint == change.target else decls.in_ports
                if name not in ports:
                    direction = "out-port" if endpoint == change.target else "in-port"
                    error(change.line, f"{endpoint} is not an {direction}")
    return diagnostics


def validate(conf: ConfiguratorConf, model: Optional[SystemModel] = None) -> list[ParseDiagnostic]:
    """Check a parsed ConfiguratorConf.

    Reports conflicting changes, duplicated ``_default`` and repeated components in
    pre/post lists. With a system model, also reports unknown components,
    ports, properties, operations, component types and arity mismatches.

    Returns:
        List of diagnostics, errors and warnings, in configuration order
    """
    diagnostics: list[ParseDiagnostic] = []
    known: dict[str, ComponentDeclarations] = {}
    if model is not None:
        known, universe_diagnostics = _universe(conf, model)
        diagnostics.extend(universe_diagnostics)

    for config_id, config in conf.configurations.items():
        diagnostics.extend(_check_spec_list(config_id, "pre", config.pre, config.line))
        diagnostics.extend(_check_spec_list(config_id, "post", config.post, config.line))
        diagnostics.extend(check_conflicts(config_id, config, model.connections if model is not None else ()))
        if model is not None:
            diagnostics.extend(_check_against_model(config_id, config, known))

    logger.debug(f"Validated {len(conf)} configurations: {len(diagnostics)} diagnostics")
    return sorted(diagnostics, key=lambda d: d.line)
