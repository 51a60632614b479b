"""Exception hierarchy for coordconf."""

from typing import Any, Optional


class CoordConfError(Exception):
    """Base class for all coordconf errors."""


# Component runtime

class RuntimeModelError(CoordConfError):
    """Error raised by the simulated component runtime."""


class UnknownComponent(RuntimeModelError):
    def __init__(self, component: str):
        self.component = component
        super().__init__(f"Unknown component: {component}")


class UnknownPort(RuntimeModelError):
    def __init__(self, component: str, port: str):
        self.component = component
        self.port = port
        super().__init__(f"Unknown port: {component}.{port}")


class UnknownProperty(RuntimeModelError):
    def __init__(self, component: str, prop: str):
        self.component = component
        self.prop = prop
        super().__init__(f"Unknown property: {component}.{prop}")


class UnknownOperation(RuntimeModelError):
    def __init__(self, component: str, operation: str):
        self.component = component
        self.operation = operation
        super().__init__(f"Unknown operation: {component}.{operation}")


class KindMismatch(RuntimeModelError):
    def __init__(self, target: str, expected: Any, actual: Any):
        self.target = target
        self.expected = expected
        self.actual = actual
        super().__init__(f"Kind mismatch on {target}: expected {expected}, got {actual}")


class ArityMismatch(RuntimeModelError):
    def __init__(self, target: str, expected: int, actual: int):
        self.target = target
        self.expected = expected
        self.actual = actual
        super().__init__(f"Arity mismatch calling {target}: expected {expected}, got {actual}")


class IllegalTransition(RuntimeModelError):
    def __init__(self, current: Any, command: Any):
        self.current = current
        self.command = command
        super().__init__(f"Illegal lifecycle command {command} from state {current}")


class ComponentFatal(RuntimeModelError):
    def __init__(self, component: str):
        self.component = component
        super().__init__(f"Component {component} is Fatal")


class FatalEndpoint(RuntimeModelError):
    def __init__(self, state: Any):
        self.state = state
        super().__init__(f"No lifecycle path through Fatal ({state})")


class DuplicateId(RuntimeModelError):
    def __init__(self, component: str):
        self.component = component
        super().__init__(f"Duplicate component id: {component}")


class DestroyWhileRunning(RuntimeModelError):
    def __init__(self, component: str):
        self.component = component
        super().__init__(f"Cannot destroy running component {component}; stop it first")


class UnknownConnection(RuntimeModelError):
    def __init__(self, source: str, target: str):
        self.source = source
        self.target = target
        super().__init__(f"Unknown connection: {source} -> {target}")


class DuplicateConnection(RuntimeModelError):
    def __init__(self, source: str, target: str):
        self.source = source
        self.target = target
        super().__init__(f"Connection already exists: {source} -> {target}")


class UnknownComponentType(RuntimeModelError):
    def __init__(self, type_name: str):
        self.type_name = type_name
        super().__init__(f"Unknown component type: {type_name}")


class OperationFailed(RuntimeModelError):
    """An operation call returned failure."""

    def __init__(self, target: str, message: str):
        self.target = target
        self.message = message
        super().__init__(f"Operation {target} failed: {message}")


# Configurator engine

class ConfigurationError(CoordConfError):
    """Error raised by the configurator engine."""


class UnknownConfiguration(ConfigurationError):
    def __init__(self, config_id: str):
        self.config_id = config_id
        super().__init__(f"Unknown configuration: {config_id}")


class EmptyStack(ConfigurationError):
    def __init__(self):
        super().__init__("Configuration stack is empty")


class QueueFull(ConfigurationError):
    def __init__(self, config_id: str):
        self.config_id = config_id
        super().__init__("queue full")


class ResolutionError(ConfigurationError):
    """One or more configuration targets could not be resolved."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


# Monitors

class MonitorError(CoordConfError):
    """Error raised while evaluating a monitor."""


class UnknownTarget(MonitorError):
    def __init__(self, target: str):
        self.target = target
        super().__init__(f"Unknown monitor target: {target}")


class AbsentValue(MonitorError):
    def __init__(self, target: str):
        self.target = target
        super().__init__(f"No value yet on {target}")


# Model files

class ModelFileError(CoordConfError):
    """A model file failed to parse or validate.

    Carries the diagnostics produced by the parser or validator.
    """

    def __init__(self, message: str, diagnostics: Optional[list] = None, path: Optional[str] = None):
        self.diagnostics = diagnostics or []
        self.path = path
        super().__init__(message)
