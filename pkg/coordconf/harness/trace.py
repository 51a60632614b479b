"""Trace records: one line per observable step of a run.

Lines have the form ``T=<time> <KIND> <detail>`` and are meant for
golden-file comparison. Logging is separate and never part of a trace.
"""

import re
import threading
import time
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Optional, Union

from pydantic import BaseModel

TRACE_LINE_PATTERN = re.compile(r"^T=(?P<time>\d+(?:\.\d+)?) (?P<kind>[A-Z]+)(?: (?P<detail>.*))?$")


class TraceKind(str, Enum):
    INIT = "INIT"
    EVENT = "EVENT"
    TRANSITION = "TRANSITION"
    CONF = "CONF"
    MONITOR = "MONITOR"
    WRITE = "WRITE"
    ASSERT = "ASSERT"


class TraceRecord(BaseModel):
    """One trace line."""

    time: float
    kind: TraceKind
    detail: str = ""

    def render(self) -> str:
        stamp = str(int(self.time)) if float(self.time).is_integer() else f"{self.time:.1f}"
        line = f"T={stamp} {self.kind.value}"
        return f"{line} {self.detail}" if self.detail else line

    @classmethod
    def parse(cls, line: str) -> "TraceRecord":
        """Parse a rendered trace line.

        Raises:
            ValueError: If the line is not a trace record
        """
        match = TRACE_LINE_PATTERN.match(line.rstrip("\n"))
        if not match:
            raise ValueError(f"Not a trace line: {line!r}")
        try:
            kind = TraceKind(match.group("kind"))
        except ValueError:
            raise ValueError(f"Unknown trace kind: {match.group('kind')}") from None
        return cls(time=float(match.group("time")), kind=kind, detail=match.group("detail") or "")


class Tracer:
    """Thread-safe, append-only collection of trace records.

    Times come from ``clock`` unless given explicitly. Records are kept in
    append order; callers are responsible for non-decreasing times.
    """

    def __init__(self, clock: Optional[Callable[[], float]] = None):
        self._clock = clock or (lambda: 0.0)
        self._records: list[TraceRecord] = []
        self._lock = threading.Lock()

    def record(self, kind: TraceKind, detail: str = "", at: Optional[float] = None) -> TraceRecord:
        with self._lock:
            stamp = self._clock() if at is None else at
            record = TraceRecord(time=stamp, kind=kind, detail=detail)
            self._records.append(record)
            return record

    @property
    def records(self) -> list[TraceRecord]:
        with self._lock:
            return list(self._records)

    def of_kind(self, *kinds: TraceKind) -> list[TraceRecord]:
        return [r for r in self.records if r.kind in kinds]

    def render(self) -> str:
        return render_trace(self.records)


def wall_clock() -> Callable[[], float]:
    """Milliseconds since the call, rounded to 0.1 ms."""
    start = time.perf_counter()
    return lambda: round((time.perf_counter() - start) * 1000.0, 1)


def render_trace(records: Iterable[TraceRecord]) -> str:
    return "".join(f"{r.render()}\n" for r in records)


def parse_trace(text: str) -> list[TraceRecord]:
    """Parse a rendered trace, skipping blank lines.

    Raises:
        ValueError: On the first line that is not a trace record
    """
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append(TraceRecord.parse(line))
        except ValueError as e:
            raise ValueError(f"line {lineno}: {e}") from None
    return records


def load_trace(path: Union[str, Path]) -> list[TraceRecord]:
    return parse_trace(Path(path).read_text(encoding="utf-8"))


def compare_traces(actual: list[TraceRecord], expected: list[TraceRecord], limit: int = 5) -> list[str]:
    """Describe where two traces differ, at most ``limit`` entries.

    Returns:
        Empty list when the traces are identical
    """
    differences = []
    for index, (a, e) in enumerate(zip(actual, expected), start=1):
        if a.render() != e.render():
            differences.append(f"record {index}: expected '{e.render()}', got '{a.render()}'")
            if len(differences) >= limit:
                return differences
    if len(actual) != len(expected):
        differences.append(f"length differs: expected {len(expected)} records, got {len(actual)}")
    return differences
