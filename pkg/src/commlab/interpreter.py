"""Tree-walking evaluator for LabScript with sandbox limits.

Execution is bounded by a step budget, a vector-length cap and a figure
cap, so a runaway submission halts instead of hanging the grader. All
randomness flows through one seeded generator, which makes a run fully
reproducible from (source, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (LabRuntimeError, LabSyntaxError, ResourceLimitError)
from .nodes import (Assign, BinOp, Call, Expr, ExprStmt, For, Ident, If,
                    IndexedAssign, Matrix, Num, Program, Range, Stmt, Str,
                    UnaryOp)
from .parser import parse
from .values import (Cell, Value, Vec, arith, as_scalar, compare, kind_of,
                     negate, render, truthy)


@dataclass
class ExecLimits:
    max_steps: int = 5_000_000
    max_vector: int = 1_000_000
    max_figures: int = 16
    seed: Optional[int] = None


@dataclass
class Curve:
    x: list[float]
    y: list[float]
    style: str = ""


@dataclass
class FigureData:
    number: int
    curves: list[Curve] = field(default_factory=list)
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""


@dataclass
class ExecOutcome:
    status: str                      # ok | script-error | resource-exceeded
    workspace: dict[str, Value]
    figures: list[FigureData]
    printed: list[str]
    error: Optional[str] = None
    error_line: Optional[int] = None
    error_col: Optional[int] = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


Builtin = Callable[["Interpreter", list[Value], int, int], Optional[Value]]


class BuiltinRegistry:
    """Name to implementation map for the functions a task exposes.

    Registering a name twice is a hard error: profiles are built by
    composition and a silent override would hide an authoring bug.
    """

    def __init__(self):
        self._fns: dict[str, Builtin] = {}

    def register(self, name: str, fn: Builtin) -> None:
        if name in self._fns:
            raise ValueError(f"builtin {name!r} registered twice")
        self._fns[name] = fn

    def get(self, name: str) -> Optional[Builtin]:
        return self._fns.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._fns

    def names(self) -> list[str]:
        return sorted(self._fns)

    def copy(self) -> "BuiltinRegistry":
        dup = BuiltinRegistry()
        dup._fns = dict(self._fns)
        return dup


class Interpreter:
    def __init__(self, registry: Optional[BuiltinRegistry] = None,
                 limits: Optional[ExecLimits] = None):
        self.registry = registry if registry is not None else BuiltinRegistry()
        self.limits = limits if limits is not None else ExecLimits()
        self.workspace: dict[str, Value] = {}
        self.hidden: dict[str, object] = {}   # native scratch for builtins
        self.figures: list[FigureData] = []
        self.current_figure: Optional[FigureData] = None
        self.printed: list[str] = []
        self.steps = 0
        self.rng = np.random.default_rng(self.limits.seed)

    # --- sandbox bookkeeping ---

    def tick(self, line: int, col: int) -> None:
        self.steps += 1
        if self.steps > self.limits.max_steps:
            raise ResourceLimitError(
                f"step limit of {self.limits.max_steps} exceeded", line, col)

    def check_len(self, n: int, line: int | None = None, col: int | None = None) -> None:
        if n > self.limits.max_vector:
            raise ResourceLimitError(
                f"vector length {n} exceeds the cap of {self.limits.max_vector}",
                line, col)

    # --- figures ---

    def fig_new(self, line: int | None = None, col: int | None = None) -> FigureData:
        if len(self.figures) >= self.limits.max_figures:
            raise ResourceLimitError(
                f"figure count exceeds the cap of {self.limits.max_figures}",
                line, col)
        fig = FigureData(number=len(self.figures) + 1)
        self.figures.append(fig)
        self.current_figure = fig
        return fig

    def fig_current(self, line: int | None = None, col: int | None = None) -> FigureData:
        if self.current_figure is None:
            return self.fig_new(line, col)
        return self.current_figure

    # --- top level ---

    def run(self, program: Program) -> ExecOutcome:
        try:
            for stmt in program.body:
                self.exec_stmt(stmt)
        except LabRuntimeError as e:
            return ExecOutcome("script-error", self.workspace, self.figures,
                               self.printed, e.message, e.line, e.col)
        except ResourceLimitError as e:
            return ExecOutcome("resource-exceeded", self.workspace, self.figures,
                               self.printed, e.message, e.line, e.col)
        return ExecOutcome("ok", self.workspace, self.figures, self.printed)

    # --- statements ---

    def exec_stmt(self, stmt: Stmt) -> None:
        self.tick(stmt.line, stmt.col)
        if isinstance(stmt, Assign):
            value = self.eval_expr(stmt.value)
            if value is None:
                raise LabRuntimeError("expression produced no value",
                                      stmt.line, stmt.col)
            self.workspace[stmt.target] = value
            if stmt.echo:
                self.printed.append(f"{stmt.target} = {render(value)}")
        elif isinstance(stmt, IndexedAssign):
            self.exec_indexed_assign(stmt)
        elif isinstance(stmt, ExprStmt):
            value = self.eval_expr(stmt.value)
            if value is None:
                return
            if isinstance(stmt.value, Ident) and stmt.value.name in self.workspace:
                if stmt.echo:
                    self.printed.append(f"{stmt.value.name} = {render(value)}")
                return
            self.workspace["ans"] = value
            if stmt.echo:
                self.printed.append(f"ans = {render(value)}")
        elif isinstance(stmt, For):
            self.exec_for(stmt)
        elif isinstance(stmt, If):
            branch = stmt.then_body if truthy(self.eval_expr_value(stmt.cond),
                                              stmt.line, stmt.col) else stmt.else_body
            for inner in branch:
                self.exec_stmt(inner)
        else:
            raise TypeError(f"unknown statement {stmt!r}")

    def exec_for(self, stmt: For) -> None:
        iterable = self.eval_expr_value(stmt.iterable)
        if isinstance(iterable, bool):
            values = [1.0 if iterable else 0.0]
        elif isinstance(iterable, float):
            values = [iterable]
        elif isinstance(iterable, Vec):
            values = iterable.items
        else:
            raise LabRuntimeError(
                f"for loop needs a number or vector, got {kind_of(iterable)}",
                stmt.line, stmt.col)
        for v in values:
            self.workspace[stmt.var] = v
            for inner in stmt.body:
                self.exec_stmt(inner)

    def exec_indexed_assign(self, stmt: IndexedAssign) -> None:
        if len(stmt.indices) != 1:
            raise LabRuntimeError("values have a single dimension; use one index",
                                  stmt.line, stmt.col)
        idx_value = self.eval_expr_value(stmt.indices[0])
        value = self.eval_expr_value(stmt.value)
        target = self.workspace.get(stmt.target)
        if target is None:
            target = Vec()
        elif isinstance(target, bool):
            target = Vec([1.0 if target else 0.0])
        elif isinstance(target, float):
            target = Vec([target])
        if not isinstance(target, Vec):
            raise LabRuntimeError(
                f"cannot assign into an element of a {kind_of(target)}",
                stmt.line, stmt.col)
        items = list(target.items)

        def put(pos: int, x: float) -> None:
            if pos > len(items):
                self.check_len(pos, stmt.line, stmt.col)
                items.extend(0.0 for _ in range(pos - len(items)))
            items[pos - 1] = x

        if isinstance(idx_value, Vec):
            positions = [self.index_int(i, stmt.line, stmt.col) for i in idx_value.items]
            if isinstance(value, Vec):
                if len(value) != len(positions):
                    raise LabRuntimeError(
                        f"cannot assign {len(value)} values to {len(positions)} positions",
                        stmt.line, stmt.col)
                for pos, x in zip(positions, value.items):
                    put(pos, x)
            else:
                x = self.scalar_arg(value, stmt.line, stmt.col)
                for pos in positions:
                    put(pos, x)
        else:
            pos = self.index_int(self.scalar_arg(idx_value, stmt.line, stmt.col),
                                 stmt.line, stmt.col)
            put(pos, self.scalar_arg(value, stmt.line, stmt.col))
        result = Vec(items)
        self.workspace[stmt.target] = result
        if stmt.echo:
            self.printed.append(f"{stmt.target} = {render(result)}")

    # --- expressions ---

    def eval_expr_value(self, expr: Expr) -> Value:
        value = self.eval_expr(expr)
        if value is None:
            raise LabRuntimeError("expression produced no value",
                                  expr.line, expr.col)
        return value

    def eval_expr(self, expr: Expr) -> Optional[Value]:
        self.tick(expr.line, expr.col)
        if isinstance(expr, Num):
            return expr.value
        if isinstance(expr, Str):
            return expr.value
        if isinstance(expr, Ident):
            if expr.name in self.workspace:
                return self.workspace[expr.name]
            fn = self.registry.get(expr.name)
            if fn is not None:
                return fn(self, [], expr.line, expr.col)
            raise LabRuntimeError(f"undefined variable or function '{expr.name}'",
                                  expr.line, expr.col)
        if isinstance(expr, UnaryOp):
            operand = self.eval_expr_value(expr.operand)
            if expr.op == "-":
                return negate(operand, expr.line, expr.col)
            s = as_scalar(operand)
            if s is not None:
                return s
            if isinstance(operand, Vec):
                return operand
            raise LabRuntimeError(f"unary '+' is not defined for {kind_of(operand)}",
                                  expr.line, expr.col)
        if isinstance(expr, BinOp):
            left = self.eval_expr_value(expr.left)
            right = self.eval_expr_value(expr.right)
            if expr.op in ("+", "-", "*", "/"):
                return arith(expr.op, left, right, expr.line, expr.col)
            return compare(expr.op, left, right, expr.line, expr.col)
        if isinstance(expr, Range):
            return self.eval_range(expr)
        if isinstance(expr, Matrix):
            return self.eval_matrix(expr)
        if isinstance(expr, Call):
            return self.eval_call(expr)
        raise TypeError(f"unknown expression {expr!r}")

    def eval_range(self, expr: Range) -> Vec:
        start = self.scalar_arg(self.eval_expr_value(expr.start), expr.line, expr.col)
        stop = self.scalar_arg(self.eval_expr_value(expr.stop), expr.line, expr.col)
        if stop < start:
            return Vec()
        count = int(stop - start + 1e-10) + 1
        self.check_len(count, expr.line, expr.col)
        return Vec(start + k for k in range(count))

    def eval_matrix(self, expr: Matrix) -> Value:
        parts = [self.eval_expr_value(e) for e in expr.elements]
        parts = [p for p in parts if not (isinstance(p, Vec) and len(p) == 0)]
        if not parts:
            return Vec()
        if any(isinstance(p, str) for p in parts):
            if not all(isinstance(p, str) for p in parts):
                raise LabRuntimeError(
                    "cannot mix strings and numbers inside [ ]", expr.line, expr.col)
            return "".join(parts)
        items: list[float] = []
        for p in parts:
            if isinstance(p, bool):
                items.append(1.0 if p else 0.0)
            elif isinstance(p, float):
                items.append(p)
            elif isinstance(p, Vec):
                items.extend(p.items)
            else:
                raise LabRuntimeError(
                    f"cannot place a {kind_of(p)} inside [ ]", expr.line, expr.col)
            self.check_len(len(items), expr.line, expr.col)
        return Vec(items)

    def eval_call(self, expr: Call) -> Optional[Value]:
        if expr.name in self.workspace:
            target = self.workspace[expr.name]
            args = [self.eval_expr_value(a) for a in expr.args]
            return self.index_value(target, args, expr.line, expr.col)
        fn = self.registry.get(expr.name)
        if fn is not None:
            args = [self.eval_expr_value(a) for a in expr.args]
            return fn(self, args, expr.line, expr.col)
        raise LabRuntimeError(f"undefined variable or function '{expr.name}'",
                              expr.line, expr.col)

    # --- indexing ---

    def scalar_arg(self, v: Value, line: int, col: int) -> float:
        s = as_scalar(v)
        if s is None:
            raise LabRuntimeError(f"expected a number, got {kind_of(v)}", line, col)
        return s

    def index_int(self, i: float, line: int, col: int) -> int:
        r = round(i)
        if abs(i - r) > 1e-9:
            raise LabRuntimeError(f"index {fmt_index(i)} is not an integer", line, col)
        if r < 1:
            raise LabRuntimeError(f"index {int(r)} is out of range; indexing starts at 1",
                                  line, col)
        return int(r)

    def index_value(self, target: Value, args: list[Value],
                    line: int, col: int) -> Value:
        if not args:
            return target
        if len(args) != 1:
            raise LabRuntimeError("values have a single dimension; use one index",
                                  line, col)
        idx = args[0]
        if isinstance(target, (bool, float)):
            target_vec = Vec([1.0 if target is True else 0.0 if target is False else target])
            return self.index_value(target_vec, args, line, col)
        if isinstance(target, Vec):
            return self.pick(target.items, idx, line, col, wrap=Vec)
        if isinstance(target, str):
            chars = list(target)
            picked = self.pick(chars, idx, line, col, wrap=None)
            return "".join(picked) if isinstance(picked, list) else picked
        if isinstance(target, Cell):
            pos = self.index_int(self.scalar_arg(idx, line, col), line, col)
            if pos > len(target.items):
                raise LabRuntimeError(
                    f"index {pos} is out of range (length {len(target.items)})",
                    line, col)
            return target.items[pos - 1]
        raise LabRuntimeError(f"cannot index a {kind_of(target)}", line, col)

    def pick(self, items: list, idx: Value, line: int, col: int, wrap):
        def one(i: float):
            pos = self.index_int(i, line, col)
            if pos > len(items):
                raise LabRuntimeError(
                    f"index {pos} is out of range (length {len(items)})", line, col)
            return items[pos - 1]

        if isinstance(idx, Vec):
            picked = [one(i) for i in idx.items]
            return wrap(picked) if wrap is not None else picked
        return one(self.scalar_arg(idx, line, col))


def fmt_index(i: float) -> str:
    return f"{i:g}"


def run_program(program: Program, registry: Optional[BuiltinRegistry] = None,
                limits: Optional[ExecLimits] = None) -> ExecOutcome:
    return Interpreter(registry, limits).run(program)


def run_source(source: str, registry: Optional[BuiltinRegistry] = None,
               limits: Optional[ExecLimits] = None) -> ExecOutcome:
    """Parse and run a script. Parse failures come back as a script-error
    outcome rather than an exception, so callers handle one shape."""
    try:
        program = parse(source)
    except LabSyntaxError as e:
        return ExecOutcome("script-error", {}, [], [], e.message, e.line, e.col)
    return run_program(program, registry, limits)
