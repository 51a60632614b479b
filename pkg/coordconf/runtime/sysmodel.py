"""System model file parser.

One statement per line; ``#`` starts a comment::

    type dynamics property force_gain real[] = {0.1, 0.1, 0.1}
    component Dynamics type dynamics
    inport Cart_Impedance.ext_ref_mode
    connect Cart_Impedance.desired_force -> Dynamics.desired_force
    fault Dynamics.reset block 500
    monitor aligned watch Cart_Impedance.desired_force when lt 0.5 emit e_aligned edge
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from coordconf.diagnostics import ParseDiagnostic, has_errors
from coordconf.errors import CoordConfError, ModelFileError
from coordconf.monitors import Comparison, MonitorSpec
from coordconf.runtime.component import (
    BehaviorKind,
    ComponentDeclarations,
    OperationBehavior,
    PropertyDecl,
)
from coordconf.runtime.registry import ComponentRegistry
from coordconf.values import ValueKind, coerce, parse_literal, unquote

logger = logging.getLogger(__name__)

_ID = r"[A-Za-z_][A-Za-z0-9_]*"
_PATH = rf"(?P<comp>{_ID})\.(?P<name>{_ID})"

STATEMENT_PATTERNS: dict[str, re.Pattern] = {
    "component": re.compile(rf"^component\s+(?P<id>{_ID})\s+type\s+(?P<type>{_ID})$"),
    "type_property": re.compile(
        rf"^type\s+(?P<type>{_ID})\s+property\s+(?P<name>{_ID})\s+(?P<kind>\w+(?:\[\])?)\s*=\s*(?P<literal>.+)$"
    ),
    "type_port": re.compile(rf"^type\s+(?P<type>{_ID})\s+(?P<dir>inport|outport)\s+(?P<name>{_ID})$"),
    "type_operation": re.compile(
        rf"^type\s+(?P<type>{_ID})\s+operation\s+(?P<name>{_ID})\s+arity\s+(?P<arity>\d+)$"
    ),
    "property": re.compile(rf"^property\s+{_PATH}\s+(?P<kind>\w+(?:\[\])?)\s*=\s*(?P<literal>.+)$"),
    "port": re.compile(rf"^(?P<dir>inport|outport)\s+{_PATH}$"),
    "operation": re.compile(rf"^operation\s+{_PATH}\s+arity\s+(?P<arity>\d+)$"),
    "connect": re.compile(rf"^connect\s+(?P<src>{_ID}\.{_ID})\s*->\s*(?P<dst>{_ID}\.{_ID})$"),
    "fault": re.compile(
        rf"^fault\s+(?P<target>{_ID}\.{_ID})\s+"
        r"(?P<behavior>succeed|crash|fail\s+(?P<msg>\"(?:[^\"\\]|\\.)*\"|'(?:[^'\\]|\\.)*')|block\s+(?P<ms>\d+))$"
    ),
    "monitor": re.compile(
        rf"^monitor\s+(?P<id>{_ID})\s+watch\s+(?P<target>{_ID}\.{_ID})\s+"
        r"when\s+(?P<op>lt|le|gt|ge|eq|<=|>=|==|<|>)\s+(?P<literal>.+?)\s+"
        r"emit\s+(?P<event>[A-Za-z_][A-Za-z0-9_.:]*)(?P<edge>\s+edge)?$"
    ),
}


@dataclass
class ComponentModel:
    """A component declared in the system model."""

    id: str
    type_name: str
    line: int
    extra: ComponentDeclarations = field(default_factory=ComponentDeclarations)


@dataclass
class SystemModel:
    """Parsed system model: type catalog, components, wiring, faults, monitors."""

    types: dict[str, ComponentDeclarations] = field(default_factory=dict)
    components: dict[str, ComponentModel] = field(default_factory=dict)
    connections: list[tuple[str, str]] = field(default_factory=list)
    faults: dict[str, OperationBehavior] = field(default_factory=dict)
    monitors: list[MonitorSpec] = field(default_factory=list)

    def declarations_for(self, component_id: str) -> ComponentDeclarations:
        """Full declarations of a component: its type plus per-instance lines."""
        model = self.components[component_id]
        base = self.types.get(model.type_name, ComponentDeclarations())
        return base.merged(model.extra)

    def has_port(self, target: str) -> bool:
        comp, _, name = target.partition(".")
        if comp not in self.components:
            return False
        decls = self.declarations_for(comp)
        return name in decls.in_ports or name in decls.out_ports

    def has_property(self, target: str) -> bool:
        comp, _, name = target.partition(".")
        return comp in self.components and name in self.declarations_for(comp).properties

    def operation_arity(self, target: str) -> Optional[int]:
        comp, _, name = target.partition(".")
        if comp not in self.components:
            return None
        return self.declarations_for(comp).operations.get(name)


def _parse_behavior(match: re.Match) -> OperationBehavior:
    behavior = match.group("behavior")
    if behavior == "succeed":
        return OperationBehavior(BehaviorKind.SUCCEED)
    if behavior == "crash":
        return OperationBehavior(BehaviorKind.CRASH)
    if match.group("ms") is not None:
        return OperationBehavior(BehaviorKind.BLOCK, duration_ms=int(match.group("ms")))
    return OperationBehavior(BehaviorKind.FAIL, message=unquote(match.group("msg")))


def _property_decl(name: str, kind_text: str, literal: str, target: str) -> PropertyDecl:
    kind = ValueKind.parse(kind_text)
    return PropertyDecl(name, kind, coerce(parse_literal(literal), kind, target))


def parse_system_model(text: str) -> tuple[SystemModel, list[ParseDiagnostic]]:
    """Parse system model text.

    Statements may appear in any order; components are resolved after all
    lines are read.

    Args:
        text: System model file contents

    Returns:
        Tuple of (model, diagnostics). The model is only meaningful when
        the diagnostics contain no errors.
    """
    model = SystemModel()
    diagnostics: list[ParseDiagnostic] = []
    instance_lines: list[tuple[int, str, re.Match]] = []
    late_lines: list[tuple[int, str, re.Match]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        column = len(raw) - len(raw.lstrip()) + 1

        for kind, pattern in STATEMENT_PATTERNS.items():
            match = pattern.match(line)
            if match:
                break
        else:
            diagnostics.append(ParseDiagnostic.error(lineno, column, f"Unrecognized statement: {line}"))
            continue

        try:
            if kind == "component":
                cid = match.group("id")
                if cid in model.components:
                    diagnostics.append(ParseDiagnostic.error(lineno, column, f"Duplicate component id: {cid}"))
                else:
                    model.components[cid] = ComponentModel(cid, match.group("type"), lineno)
            elif kind.startswith("type_"):
                decls = model.types.setdefault(match.group("type"), ComponentDeclarations())
                _apply_declaration(decls, kind[len("type_"):], match, f"{match.group('type')}.{match.group('name')}")
            elif kind in ("property", "port", "operation"):
                instance_lines.append((lineno, kind, match))
            else:
                late_lines.append((lineno, kind, match))
        except (ValueError, CoordConfError) as e:
            diagnostics.append(ParseDiagnostic.error(lineno, column, str(e)))

    for lineno, kind, match in instance_lines:
        comp = match.group("comp")
        if comp not in model.components:
            diagnostics.append(ParseDiagnostic.error(lineno, 1, f"Unknown component: {comp}"))
            continue
        try:
            _apply_declaration(model.components[comp].extra, kind, match, f"{comp}.{match.group('name')}")
        except (ValueError, CoordConfError) as e:
            diagnostics.append(ParseDiagnostic.error(lineno, 1, str(e)))

    for lineno, kind, match in late_lines:
        try:
            _apply_late(model, kind, match)
        except (ValueError, CoordConfError) as e:
            diagnostics.append(ParseDiagnostic.error(lineno, 1, str(e)))

    return model, diagnostics


def _apply_declaration(decls: ComponentDeclarations, kind: str, match: re.Match, target: str) -> None:
    name = match.group("name")
    if kind == "property":
        decls.properties[name] = _property_decl(name, match.group("kind"), match.group("literal"), target)
    elif kind == "port":
        ports = decls.in_ports if match.group("dir") == "inport" else decls.out_ports
        if name in decls.in_ports or name in decls.out_ports:
            raise ValueError(f"Duplicate port: {target}")
        ports.append(name)
    elif kind == "operation":
        decls.operations[name] = int(match.group("arity"))


def _apply_late(model: SystemModel, kind: str, match: re.Match) -> None:
    if kind == "connect":
        src, dst = match.group("src"), match.group("dst")
        src_comp, _, src_port = src.partition(".")
        dst_comp, _, dst_port = dst.partition(".")
        for comp in (src_comp, dst_comp):
            if comp not in model.components:
                raise ValueError(f"Unknown component: {comp}")
        if src_port not in model.declarations_for(src_comp).out_ports:
            raise ValueError(f"Not an out-port: {src}")
        if dst_port not in model.declarations_for(dst_comp).in_ports:
            raise ValueError(f"Not an in-port: {dst}")
        if (src, dst) in model.connections:
            raise ValueError(f"Duplicate connection: {src} -> {dst}")
        model.connections.append((src, dst))
    elif kind == "fault":
        target = match.group("target")
        if model.operation_arity(target) is None:
            raise ValueError(f"Unknown operation: {target}")
        model.faults[target] = _parse_behavior(match)
    elif kind == "monitor":
        target = match.group("target")
        if not (model.has_port(target) or model.has_property(target)):
            raise ValueError(f"Unknown monitor target: {target}")
        model.monitors.append(
            MonitorSpec(
                id=match.group("id"),
                target=target,
                comparison=Comparison.parse(match.group("op")),
                threshold=parse_literal(match.group("literal")),
                event=match.group("event"),
                edge=match.group("edge") is not None,
            )
        )


def load_system_model(path: Path) -> SystemModel:
    """Read and parse a system model file.

    Raises:
        ModelFileError: If the file has errors
    """
    model, diagnostics = parse_system_model(path.read_text(encoding="utf-8"))
    if has_errors(diagnostics):
        raise ModelFileError(f"Invalid system model: {path}", diagnostics, str(path))
    return model


def build_registry(
    model: SystemModel, sleep: Optional[Callable[[float], None]] = None
) -> ComponentRegistry:
    """Create a registry populated with the model's components, connections and faults."""
    registry = ComponentRegistry() if sleep is None else ComponentRegistry(sleep=sleep)
    for cid, comp_model in model.components.items():
        registry.component_create(cid, comp_model.type_name, model.declarations_for(cid))
    for src, dst in model.connections:
        registry.connection_create(src, dst)
    for target, behavior in model.faults.items():
        registry.set_behavior(target, behavior)
    logger.info(f"Registry built: {len(registry)} components, {len(model.connections)} connections")
    return registry
