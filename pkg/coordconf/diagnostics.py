"""Diagnostics reported by the model file parsers and validators."""

from dataclasses import dataclass
from enum import Enum
from typing import Iterable


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class ParseDiagnostic:
    """One problem found in a model file (1-based line and column)."""

    severity: Severity
    line: int
    column: int
    message: str

    @classmethod
    def error(cls, line: int, column: int, message: str) -> "ParseDiagnostic":
        return cls(Severity.ERROR, line, column, message)

    @classmethod
    def warning(cls, line: int, column: int, message: str) -> "ParseDiagnostic":
        return cls(Severity.WARNING, line, column, message)

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def format(self, filename: str = "<input>") -> str:
        """Render as ``file:line:col: severity: message``."""
        return f"{filename}:{self.line}:{self.column}: {self.severity.value}: {self.message}"


def has_errors(diagnostics: Iterable[ParseDiagnostic]) -> bool:
    return any(d.is_error for d in diagnostics)
