"""Dynamically typed values flowing through ports, properties and operations.

A value is one of ``bool``, ``int``, ``float``, ``str`` or a ``tuple`` of one
scalar kind. Tuples are used for arrays so values stay immutable and can be
shared freely between threads.
"""

import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import Union

from coordconf.errors import KindMismatch

Scalar = Union[bool, int, float, str]
Value = Union[Scalar, tuple]

REAL_TOLERANCE = 1e-12


class ScalarKind(str, Enum):
    """Scalar kinds a value can have."""

    BOOL = "bool"
    INT = "int"
    REAL = "real"
    STRING = "string"


@dataclass(frozen=True)
class ValueKind:
    """Kind of a value: a scalar kind, optionally as a homogeneous array."""

    scalar: ScalarKind
    array: bool = False

    def __str__(self) -> str:
        return f"{self.scalar.value}[]" if self.array else self.scalar.value

    @classmethod
    def parse(cls, text: str) -> "ValueKind":
        """Parse a kind name such as ``real`` or ``real[]``.

        Raises:
            ValueError: If the name is not a known kind
        """
        text = text.strip()
        array = text.endswith("[]")
        name = text[:-2] if array else text
        try:
            return cls(ScalarKind(name), array)
        except ValueError:
            raise ValueError(f"Unknown value kind: {text}") from None


def _scalar_kind(v: object) -> ScalarKind:
    # bool first: bool is a subclass of int
    if isinstance(v, bool):
        return ScalarKind.BOOL
    if isinstance(v, int):
        return ScalarKind.INT
    if isinstance(v, float):
        return ScalarKind.REAL
    if isinstance(v, str):
        return ScalarKind.STRING
    raise TypeError(f"Not a value: {v!r}")


def kind_of(v: Value) -> ValueKind:
    """Return the kind of a value.

    Arrays mixing int and real are real arrays; any other mix is rejected.

    Raises:
        TypeError: If the value is not a valid Value
    """
    if isinstance(v, (tuple, list)):
        if not v:
            raise TypeError("Arrays must not be empty")
        kinds = {_scalar_kind(item) for item in v}
        if kinds == {ScalarKind.INT, ScalarKind.REAL}:
            return ValueKind(ScalarKind.REAL, array=True)
        if len(kinds) != 1:
            raise TypeError(f"Array mixes kinds: {sorted(k.value for k in kinds)}")
        return ValueKind(kinds.pop(), array=True)
    return ValueKind(_scalar_kind(v))


def make_value(v: object) -> Value:
    """Normalize a Python object into a Value.

    Lists become tuples and int/real arrays are widened to real.
    """
    if isinstance(v, (list, tuple)):
        kind = kind_of(tuple(v))
        if kind.scalar is ScalarKind.REAL:
            return tuple(float(item) for item in v)
        return tuple(v)
    kind_of(v)  # type check
    return v


def coerce(v: Value, kind: ValueKind, target: str = "") -> Value:
    """Convert a value to the given kind.

    Only int -> real widening is performed; everything else must match.

    Raises:
        KindMismatch: If the value cannot take the kind
    """
    actual = kind_of(v)
    if actual == kind:
        return v
    if actual.array == kind.array and actual.scalar is ScalarKind.INT and kind.scalar is ScalarKind.REAL:
        if kind.array:
            return tuple(float(item) for item in v)
        return float(v)
    raise KindMismatch(target, str(kind), str(actual))


def values_equal(a: Value, b: Value, tol: float = 0.0) -> bool:
    """Deep equality of two values.

    bool, int and string compare exactly and kinds must agree. Reals
    compare within ``tol``.
    """
    if a is None or b is None:
        return a is None and b is None
    try:
        ka, kb = kind_of(a), kind_of(b)
    except TypeError:
        return False
    if ka != kb:
        return False
    if ka.array:
        return len(a) == len(b) and all(values_equal(x, y, tol) for x, y in zip(a, b))
    if ka.scalar is ScalarKind.REAL:
        return a == b or abs(a - b) <= tol
    return a == b


def values_match(expected: Value, actual: Value, tol: float = REAL_TOLERANCE) -> bool:
    """Compare an expected literal against a stored value.

    The expected value is widened to the stored kind first, so ``{0, 0, 0}``
    matches a stored real array of zeros.
    """
    if actual is None or expected is None:
        return actual is None and expected is None
    try:
        expected = coerce(expected, kind_of(actual))
    except (KindMismatch, TypeError):
        return False
    return values_equal(expected, actual, tol)


def norm(v: Value) -> float:
    """Magnitude of a numeric value: Euclidean norm for arrays, abs for scalars."""
    kind = kind_of(v)
    if kind.scalar not in (ScalarKind.INT, ScalarKind.REAL):
        raise TypeError(f"Not numeric: {kind}")
    if kind.array:
        return math.hypot(*v)
    return abs(float(v))


def is_numeric(v: Value) -> bool:
    """Check whether a value is numeric (scalar or array)."""
    return kind_of(v).scalar in (ScalarKind.INT, ScalarKind.REAL)


# Literal text form shared by the model files and the DSL printer

def format_value(v: Value) -> str:
    """Render a value in literal form (``true``, ``33.4``, ``"s"``, ``{1, 2}``)."""
    if isinstance(v, tuple):
        return "{" + ", ".join(format_value(item) for item in v) + "}"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, int):
        return str(v)
    escaped = v.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
    return f'"{escaped}"'


LITERAL_TOKEN_PATTERN = re.compile(
    r'\s*(?:'
    r'(?P<string>"(?:[^"\\\n]|\\.)*"|\'(?:[^\'\\\n]|\\.)*\')'
    r'|(?P<number>[+-]?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)'
    r'|(?P<word>true|false)\b'
    r'|(?P<punct>[{},])'
    r')'
)

_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"', "'": "'"}


def unquote(token: str) -> str:
    """Strip quotes from a string literal and resolve escapes."""
    body = token[1:-1]
    return re.sub(r"\\(.)", lambda m: _ESCAPES.get(m.group(1), m.group(1)), body)


INT_MIN = -(2**63)
INT_MAX = 2**63 - 1


def parse_number(text: str) -> Union[int, float]:
    """Parse a numeric literal: int unless it has a fraction or exponent.

    Raises:
        ValueError: If a real overflows to infinity or an int does not fit in 64 bits
    """
    if any(c in text for c in ".eE"):
        number = float(text)
        if not math.isfinite(number):
            raise ValueError(f"real literal out of range: {text}")
        return number
    number = int(text)
    if not INT_MIN <= number <= INT_MAX:
        raise ValueError(f"int literal out of 64-bit range: {text}")
    return number


def parse_literal(text: str) -> Value:
    """Parse a literal value such as ``true``, ``33.4``, ``"x"`` or ``{0.1, 0.1}``.

    Raises:
        ValueError: If the text is not a single well-formed literal
    """
    tokens: list[tuple[str, str]] = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        match = LITERAL_TOKEN_PATTERN.match(text, pos)
        if not match or match.end() == pos:
            raise ValueError(f"Invalid literal: {text!r}")
        kind = match.lastgroup
        tokens.append((kind, match.group(kind)))
        pos = match.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1

    if not tokens:
        raise ValueError("Empty literal")

    def scalar(kind: str, token: str) -> Scalar:
        if kind == "string":
            return unquote(token)
        if kind == "number":
            return parse_number(token)
        if kind == "word":
            return token == "true"
        raise ValueError(f"Unexpected {token!r} in literal {text!r}")

    if tokens[0] != ("punct", "{"):
        if len(tokens) != 1:
            raise ValueError(f"Invalid literal: {text!r}")
        return scalar(*tokens[0])

    if tokens[-1] != ("punct", "}"):
        raise ValueError(f"Unbalanced braces in literal: {text!r}")
    items: list[Scalar] = []
    expect_item = True
    for kind, token in tokens[1:-1]:
        if expect_item:
            items.append(scalar(kind, token))
            expect_item = False
        elif (kind, token) == ("punct", ","):
            expect_item = True
        else:
            raise ValueError(f"Expected ',' in literal {text!r}, got {token!r}")
    try:
        return make_value(items)
    except TypeError as e:
        raise ValueError(str(e)) from None
