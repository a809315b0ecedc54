"""AST node types for LabScript.

Positions are carried for error reporting but excluded from equality so
tests can compare trees structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union


@dataclass
class Node:
    line: int = field(compare=False)
    col: int = field(compare=False)


# --- expressions ---

@dataclass
class Num(Node):
    value: float


@dataclass
class Str(Node):
    value: str


@dataclass
class Ident(Node):
    name: str


@dataclass
class UnaryOp(Node):
    op: str                      # '-' or '+'
    operand: "Expr"


@dataclass
class BinOp(Node):
    op: str                      # + - * / == ~= < <= > >=
    left: "Expr"
    right: "Expr"


@dataclass
class Range(Node):
    start: "Expr"
    stop: "Expr"


@dataclass
class Matrix(Node):
    elements: list["Expr"]


@dataclass
class Call(Node):
    """Postfix application: either indexing a variable or calling a builtin.

    Which one applies is only known at run time, because variables shadow
    builtins of the same name.
    """
    name: str
    args: list["Expr"]


Expr = Union[Num, Str, Ident, UnaryOp, BinOp, Range, Matrix, Call]


# --- statements ---

@dataclass
class Assign(Node):
    target: str
    value: Expr
    echo: bool


@dataclass
class IndexedAssign(Node):
    target: str
    indices: list[Expr]
    value: Expr
    echo: bool


@dataclass
class ExprStmt(Node):
    value: Expr
    echo: bool


@dataclass
class For(Node):
    var: str
    iterable: Expr
    body: list["Stmt"]


@dataclass
class If(Node):
    cond: Expr
    then_body: list["Stmt"]
    else_body: list["Stmt"]


Stmt = Union[Assign, IndexedAssign, ExprStmt, For, If]


@dataclass
class Program:
    body: list[Stmt]


def _children(node) -> list:
    if isinstance(node, Program):
        return list(node.body)
    if isinstance(node, UnaryOp):
        return [node.operand]
    if isinstance(node, BinOp):
        return [node.left, node.right]
    if isinstance(node, Range):
        return [node.start, node.stop]
    if isinstance(node, Matrix):
        return list(node.elements)
    if isinstance(node, Call):
        return list(node.args)
    if isinstance(node, Assign):
        return [node.value]
    if isinstance(node, IndexedAssign):
        return list(node.indices) + [node.value]
    if isinstance(node, ExprStmt):
        return [node.value]
    if isinstance(node, For):
        return [node.iterable] + list(node.body)
    if isinstance(node, If):
        return [node.cond] + list(node.then_body) + list(node.else_body)
    return []


def walk(node):
    """Yield node and every node beneath it, in source order."""
    stack = [node]
    while stack:
        cur = stack.pop()
        yield cur
        stack.extend(reversed(_children(cur)))
