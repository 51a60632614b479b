"""Simulated component runtime."""

from coordconf.runtime.component import (
    BehaviorKind,
    CallOutcome,
    Component,
    ComponentDeclarations,
    LifecycleCommand,
    LifecycleState,
    OperationBehavior,
    OperationSpec,
    PropertyDecl,
    compute_lifecycle_path,
)
from coordconf.runtime.registry import ComponentRegistry, split_target
from coordconf.runtime.snapshot import ComponentSnapshot, Connection, SystemSnapshot

__all__ = [
    "BehaviorKind",
    "CallOutcome",
    "Component",
    "ComponentDeclarations",
    "ComponentRegistry",
    "ComponentSnapshot",
    "Connection",
    "LifecycleCommand",
    "LifecycleState",
    "OperationBehavior",
    "OperationSpec",
    "PropertyDecl",
    "SystemSnapshot",
    "compute_lifecycle_path",
    "split_target",
]
