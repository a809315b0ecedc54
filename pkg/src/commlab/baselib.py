"""General-purpose builtins available in every task profile.

Argument helpers here are shared with the signal-chain builtins: they
check arity and coerce between the script's value kinds and plain Python
numbers/lists, raising positioned script errors on mismatch.
"""

from __future__ import annotations

import math

from .errors import LabRuntimeError
from .interpreter import BuiltinRegistry, Curve, Interpreter
from .values import Cell, Value, Vec, as_scalar, fmt_number, kind_of, render


# --- argument checking ---

def arity(name: str, args: list[Value], low: int, high: int,
          line: int, col: int) -> None:
    if not (low <= len(args) <= high):
        if low == high:
            want = f"{low} argument" + ("s" if low != 1 else "")
        else:
            want = f"{low} to {high} arguments"
        raise LabRuntimeError(f"{name} takes {want}, got {len(args)}", line, col)


def arg_number(name: str, args: list[Value], i: int, line: int, col: int) -> float:
    s = as_scalar(args[i])
    if s is None:
        raise LabRuntimeError(
            f"argument {i + 1} of {name} must be a number, got {kind_of(args[i])}",
            line, col)
    return s


def arg_int(name: str, args: list[Value], i: int, line: int, col: int,
            minimum: int | None = None) -> int:
    x = arg_number(name, args, i, line, col)
    r = round(x)
    if abs(x - r) > 1e-9:
        raise LabRuntimeError(
            f"argument {i + 1} of {name} must be an integer, got {fmt_number(x)}",
            line, col)
    if minimum is not None and r < minimum:
        raise LabRuntimeError(
            f"argument {i + 1} of {name} must be at least {minimum}", line, col)
    return int(r)


def arg_string(name: str, args: list[Value], i: int, line: int, col: int) -> str:
    if not isinstance(args[i], str):
        raise LabRuntimeError(
            f"argument {i + 1} of {name} must be a string, got {kind_of(args[i])}",
            line, col)
    return args[i]


def arg_numbers(name: str, args: list[Value], i: int, line: int, col: int) -> list[float]:
    """Vector view of an argument; scalars become one-element lists."""
    v = args[i]
    if isinstance(v, Vec):
        return list(v.items)
    s = as_scalar(v)
    if s is not None:
        return [s]
    raise LabRuntimeError(
        f"argument {i + 1} of {name} must be a vector, got {kind_of(v)}",
        line, col)


def elementwise(name: str, fn, args: list[Value], line: int, col: int) -> Value:
    """Apply a scalar function across one or two broadcast arguments."""
    if len(args) == 1:
        v = args[0]
        s = as_scalar(v)
        if s is not None:
            return _finite(name, fn(s), line, col)
        if isinstance(v, Vec):
            return Vec(_finite(name, fn(x), line, col) for x in v.items)
        raise LabRuntimeError(f"{name} is not defined for {kind_of(v)}", line, col)
    a = arg_numbers(name, args, 0, line, col)
    b = arg_numbers(name, args, 1, line, col)
    scalar_out = as_scalar(args[0]) is not None and as_scalar(args[1]) is not None
    if len(a) == 1 and len(b) > 1:
        a = a * len(b)
    elif len(b) == 1 and len(a) > 1:
        b = b * len(a)
    elif len(a) != len(b):
        raise LabRuntimeError(
            f"shape mismatch: {name} on vectors of length {len(a)} and {len(b)}",
            line, col)
    out = [_finite(name, fn(x, y), line, col) for x, y in zip(a, b)]
    return out[0] if scalar_out else Vec(out)


def _finite(name: str, x: float, line: int, col: int) -> float:
    if not math.isfinite(x):
        raise LabRuntimeError(f"{name} produced a non-finite value", line, col)
    return float(x)


# --- builtins ---

def _plot(interp: Interpreter, args: list[Value], line: int, col: int):
    style = ""
    if args and isinstance(args[-1], str):
        style = args[-1]
        args = args[:-1]
    arity("plot", args, 1, 2, line, col)
    if len(args) == 1:
        y = arg_numbers("plot", args, 0, line, col)
        x = [float(i) for i in range(1, len(y) + 1)]
    else:
        x = arg_numbers("plot", args, 0, line, col)
        y = arg_numbers("plot", args, 1, line, col)
        if len(x) != len(y):
            raise LabRuntimeError(
                f"plot arguments differ in length ({len(x)} vs {len(y)})",
                line, col)
    fig = interp.fig_current(line, col)
    fig.curves.append(Curve(x, y, style))
    return None


def _figure(interp: Interpreter, args: list[Value], line: int, col: int):
    arity("figure", args, 0, 1, line, col)
    if not args:
        interp.fig_new(line, col)
        return None
    n = arg_int("figure", args, 0, line, col, minimum=1)
    if n <= len(interp.figures):
        interp.current_figure = interp.figures[n - 1]
    elif n == len(interp.figures) + 1:
        interp.fig_new(line, col)
    else:
        raise LabRuntimeError(
            f"figure {n} does not exist yet; figures are numbered in order",
            line, col)
    return None


def _label_setter(which: str):
    def setter(interp: Interpreter, args: list[Value], line: int, col: int):
        arity(which, args, 1, 1, line, col)
        text = arg_string(which, args, 0, line, col)
        setattr(interp.fig_current(line, col), which, text)
        return None
    return setter


def _disp(interp: Interpreter, args: list[Value], line: int, col: int):
    arity("disp", args, 1, 1, line, col)
    interp.printed.append(render(args[0]))
    return None


def _num2str(interp: Interpreter, args: list[Value], line: int, col: int):
    arity("num2str", args, 1, 1, line, col)
    v = args[0]
    s = as_scalar(v)
    if s is not None:
        return fmt_number(s)
    if isinstance(v, Vec):
        return " ".join(fmt_number(x) for x in v.items)
    raise LabRuntimeError(f"num2str is not defined for {kind_of(v)}", line, col)


def _double(interp: Interpreter, args: list[Value], line: int, col: int):
    arity("double", args, 1, 1, line, col)
    v = args[0]
    if isinstance(v, str):
        return Vec(float(ord(c)) for c in v)
    if isinstance(v, bool):
        return 1.0 if v else 0.0
    if isinstance(v, float):
        return v
    if isinstance(v, Vec):
        return Vec(v.items)
    raise LabRuntimeError(f"double is not defined for {kind_of(v)}", line, col)


def _char(interp: Interpreter, args: list[Value], line: int, col: int):
    arity("char", args, 1, 1, line, col)
    codes = arg_numbers("char", args, 0, line, col)
    chars = []
    for x in codes:
        r = round(x)
        if abs(x - r) > 1e-9 or not (0 <= r <= 255):
            raise LabRuntimeError(
                f"char code {fmt_number(x)} is not an integer in 0..255", line, col)
        chars.append(chr(int(r)))
    return "".join(chars)


def _xor(interp: Interpreter, args: list[Value], line: int, col: int):
    arity("xor", args, 2, 2, line, col)
    return elementwise("xor", lambda x, y: float((x != 0) != (y != 0)),
                       args, line, col)


def _fill(name: str, value: float):
    def fill(interp: Interpreter, args: list[Value], line: int, col: int):
        arity(name, args, 1, 2, line, col)
        if len(args) == 2:
            # accept the common 2-argument habit for row vectors
            rows = arg_int(name, args, 0, line, col, minimum=0)
            cols = arg_int(name, args, 1, line, col, minimum=0)
            if rows != 1 and cols != 1 and rows * cols != 0:
                raise LabRuntimeError(
                    f"only vectors are supported; use {name}(1, n)", line, col)
            n = rows * cols
        else:
            n = arg_int(name, args, 0, line, col, minimum=0)
        interp.check_len(n, line, col)
        return Vec([value] * n)
    return fill


def _length(interp: Interpreter, args: list[Value], line: int, col: int):
    arity("length", args, 1, 1, line, col)
    v = args[0]
    if isinstance(v, (Vec, Cell)):
        return float(len(v.items))
    if isinstance(v, str):
        return float(len(v))
    return 1.0


def _floor(interp: Interpreter, args: list[Value], line: int, col: int):
    arity("floor", args, 1, 1, line, col)
    return elementwise("floor", math.floor, args, line, col)


def _mod(interp: Interpreter, args: list[Value], line: int, col: int):
    arity("mod", args, 2, 2, line, col)

    def mod(x: float, y: float) -> float:
        if y == 0:
            return x
        return x - math.floor(x / y) * y
    return elementwise("mod", mod, args, line, col)


def register(registry: BuiltinRegistry) -> BuiltinRegistry:
    registry.register("plot", _plot)
    registry.register("figure", _figure)
    registry.register("title", _label_setter("title"))
    registry.register("xlabel", _label_setter("xlabel"))
    registry.register("ylabel", _label_setter("ylabel"))
    registry.register("disp", _disp)
    registry.register("num2str", _num2str)
    registry.register("double", _double)
    registry.register("char", _char)
    registry.register("xor", _xor)
    registry.register("zeros", _fill("zeros", 0.0))
    registry.register("ones", _fill("ones", 1.0))
    registry.register("length", _length)
    registry.register("floor", _floor)
    registry.register("mod", _mod)
    return registry
