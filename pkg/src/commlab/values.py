"""Runtime values of LabScript.

Five variants: number (64-bit float), numeric vector, string, list and
boolean. Numbers, strings and booleans map onto plain Python types;
vectors and lists get small wrapper classes so the two container kinds
stay distinguishable.
"""

from __future__ import annotations

import math
from typing import Iterable, Union

from .errors import LabRuntimeError

MAX_LIST_DEPTH = 8


class Vec:
    """Ordered numeric vector, 1-indexed at the language level."""

    __slots__ = ("items",)

    def __init__(self, items: Iterable[float] = ()):
        self.items = [float(v) for v in items]

    def __len__(self) -> int:
        return len(self.items)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vec) and self.items == other.items

    def __hash__(self):
        return hash(tuple(self.items))

    def __repr__(self) -> str:
        return f"Vec({self.items!r})"


class Cell:
    """Ordered heterogeneous container (the trace/list type)."""

    __slots__ = ("items",)

    def __init__(self, items: Iterable["Value"] = ()):
        self.items = list(items)

    def __len__(self) -> int:
        return len(self.items)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Cell) and self.items == other.items

    def __repr__(self) -> str:
        return f"Cell({self.items!r})"


Value = Union[float, bool, str, Vec, Cell]


def kind_of(v: Value) -> str:
    # bool before float: bool is an int subclass
    if isinstance(v, bool):
        return "boolean"
    if isinstance(v, float):
        return "number"
    if isinstance(v, str):
        return "string"
    if isinstance(v, Vec):
        return "vector"
    if isinstance(v, Cell):
        return "list"
    raise TypeError(f"not a LabScript value: {v!r}")


def cell_depth(v: Value) -> int:
    if isinstance(v, Cell):
        return 1 + max((cell_depth(x) for x in v.items), default=0)
    return 0


def check_cell_depth(v: Cell, line: int | None = None, col: int | None = None) -> None:
    if cell_depth(v) > MAX_LIST_DEPTH:
        raise LabRuntimeError(f"list nesting deeper than {MAX_LIST_DEPTH}", line, col)


def fmt_number(x: float) -> str:
    if x != x:
        return "NaN"
    if math.isinf(x):
        return "Inf" if x > 0 else "-Inf"
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return f"{x:.6g}"


def render(v: Value, max_elems: int = 64) -> str:
    """Human-readable rendering used for echo, disp() and CLI dumps."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_number(v)
    if isinstance(v, str):
        return v
    if isinstance(v, Vec):
        shown = v.items[:max_elems]
        body = " ".join(fmt_number(x) for x in shown)
        if len(v.items) > max_elems:
            return f"[{body} ...] ({len(v.items)} elements)"
        return f"[{body}]"
    if isinstance(v, Cell):
        shown = ", ".join(render(x, max_elems=8) for x in v.items[:max_elems])
        suffix = ", ..." if len(v.items) > max_elems else ""
        return f"{{{shown}{suffix}}}"
    raise TypeError(f"not a LabScript value: {v!r}")


def summarize(v: Value, max_elems: int = 16) -> str:
    """Compact rendering for feedback messages: vectors truncate to the
    first 16 elements plus a length note."""
    if isinstance(v, bool) or isinstance(v, float):
        return render(v)
    if isinstance(v, str):
        s = v if len(v) <= 48 else v[:48] + "..."
        return f"'{s}'"
    if isinstance(v, Vec):
        shown = v.items[:max_elems]
        body = " ".join(fmt_number(x) for x in shown)
        if len(v.items) > max_elems:
            return f"[{body} ...] (length {len(v.items)})"
        return f"[{body}] (length {len(v.items)})"
    if isinstance(v, Cell):
        return f"list of {len(v.items)} entries"
    raise TypeError(f"not a LabScript value: {v!r}")


def as_scalar(v: Value) -> float | None:
    """Number view of a value, treating booleans and 1-element vectors as
    scalars. None when the value is not scalar-like."""
    if isinstance(v, bool):
        return 1.0 if v else 0.0
    if isinstance(v, float):
        return v
    if isinstance(v, Vec) and len(v.items) == 1:
        return v.items[0]
    return None


_CMP = {
    "==": lambda a, b: a == b,
    "~=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}

_ARITH = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
}


def _check_finite(x: float, op: str, line, col) -> float:
    if not math.isfinite(x):
        raise LabRuntimeError(f"'{op}' produced a non-finite value", line, col)
    return x


def arith(op: str, a: Value, b: Value, line: int | None = None, col: int | None = None) -> Value:
    """Elementwise arithmetic with scalar broadcast.

    Booleans and 1-element vectors participate as scalars; two vectors must
    have equal length. Non-finite results (division by zero, overflow) are
    reported as script errors rather than propagated.
    """
    fn = _ARITH[op]
    sa, sb = as_scalar(a), as_scalar(b)
    if sa is not None and sb is not None:
        try:
            return _check_finite(fn(sa, sb), op, line, col)
        except ZeroDivisionError:
            raise LabRuntimeError(f"'{op}' produced a non-finite value", line, col) from None
    va = a if isinstance(a, Vec) else None
    vb = b if isinstance(b, Vec) else None
    try:
        if va is not None and vb is not None:
            if len(va) != len(vb):
                raise LabRuntimeError(
                    f"shape mismatch: '{op}' on vectors of length {len(va)} and {len(vb)}",
                    line, col)
            return Vec(_check_finite(fn(x, y), op, line, col) for x, y in zip(va.items, vb.items))
        if va is not None and sb is not None:
            return Vec(_check_finite(fn(x, sb), op, line, col) for x in va.items)
        if sa is not None and vb is not None:
            return Vec(_check_finite(fn(sa, y), op, line, col) for y in vb.items)
    except ZeroDivisionError:
        raise LabRuntimeError(f"'{op}' produced a non-finite value", line, col) from None
    raise LabRuntimeError(
        f"'{op}' is not defined for {kind_of(a)} and {kind_of(b)}", line, col)


def compare(op: str, a: Value, b: Value, line: int | None = None, col: int | None = None) -> Value:
    """Comparison: scalar pair gives a boolean, vector operands give a 0/1
    vector. String equality/inequality is supported."""
    fn = _CMP[op]
    if isinstance(a, str) or isinstance(b, str):
        if op in ("==", "~=") and isinstance(a, str) and isinstance(b, str):
            return bool(fn(a, b))
        raise LabRuntimeError(f"'{op}' is not defined for these operands", line, col)
    sa, sb = as_scalar(a), as_scalar(b)
    if sa is not None and sb is not None:
        return bool(fn(sa, sb))
    va = a if isinstance(a, Vec) else None
    vb = b if isinstance(b, Vec) else None
    if va is not None and vb is not None:
        if len(va) != len(vb):
            raise LabRuntimeError(
                f"shape mismatch: '{op}' on vectors of length {len(va)} and {len(vb)}",
                line, col)
        return Vec(1.0 if fn(x, y) else 0.0 for x, y in zip(va.items, vb.items))
    if va is not None and sb is not None:
        return Vec(1.0 if fn(x, sb) else 0.0 for x in va.items)
    if sa is not None and vb is not None:
        return Vec(1.0 if fn(sa, y) else 0.0 for y in vb.items)
    raise LabRuntimeError(
        f"'{op}' is not defined for {kind_of(a)} and {kind_of(b)}", line, col)


def negate(a: Value, line: int | None = None, col: int | None = None) -> Value:
    s = as_scalar(a)
    if s is not None:
        return -s
    if isinstance(a, Vec):
        return Vec(-x for x in a.items)
    raise LabRuntimeError(f"unary '-' is not defined for {kind_of(a)}", line, col)


def truthy(v: Value, line: int | None = None, col: int | None = None) -> bool:
    """Condition semantics: booleans as-is, numbers nonzero, vectors true
    iff nonempty and all elements nonzero."""
    if isinstance(v, bool):
        return v
    if isinstance(v, float):
        return v != 0.0
    if isinstance(v, Vec):
        return len(v.items) > 0 and all(x != 0.0 for x in v.items)
    raise LabRuntimeError(f"condition must be boolean or numeric, got {kind_of(v)}", line, col)
