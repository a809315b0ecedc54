"""Recursive-descent parser for LabScript.

Statement separators are newline, ',' and ';'. A statement terminated by
';' has its echo suppressed. Blocks (for / if-else) close with 'end'.
Identifiers beginning with two underscores are rejected here; that prefix
is reserved for values the runtime records on its own.
"""

from __future__ import annotations

from .errors import LabSyntaxError
from .lexer import Token, tokenize
from .nodes import (Assign, BinOp, Call, Expr, ExprStmt, For, Ident, If,
                    IndexedAssign, Matrix, Num, Program, Range, Stmt, Str,
                    UnaryOp)

_COMPARISONS = ("==", "~=", "<", "<=", ">", ">=")


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # --- token plumbing ---

    def peek(self, offset: int = 0) -> Token:
        i = min(self.pos + offset, len(self.tokens) - 1)
        return self.tokens[i]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at_op(self, *texts: str) -> bool:
        tok = self.peek()
        return tok.kind == "OP" and tok.text in texts

    def expect_op(self, text: str) -> Token:
        tok = self.peek()
        if not (tok.kind == "OP" and tok.text == text):
            raise self.error(f"expected {text!r}", tok)
        return self.advance()

    def error(self, message: str, tok: Token | None = None) -> LabSyntaxError:
        tok = tok or self.peek()
        if tok.kind == "EOF":
            return LabSyntaxError(f"{message}, found end of input", tok.line, tok.col)
        shown = tok.text if tok.kind != "NEWLINE" else "end of line"
        return LabSyntaxError(f"{message}, found {shown!r}", tok.line, tok.col)

    def ident_name(self, tok: Token) -> str:
        if tok.text.startswith("__"):
            raise LabSyntaxError(
                f"identifier '{tok.text}' uses the reserved '__' prefix",
                tok.line, tok.col)
        return tok.text

    # --- statements ---

    def parse_program(self) -> Program:
        body = self.parse_body(until=())
        tok = self.peek()
        if tok.kind != "EOF":
            if tok.kind == "KEYWORD" and tok.text == "end":
                raise self.error("'end' without a matching 'for' or 'if'", tok)
            raise self.error("expected a statement", tok)
        return Program(body)

    def parse_body(self, until: tuple[str, ...]) -> list[Stmt]:
        body: list[Stmt] = []
        while True:
            self.skip_separators()
            tok = self.peek()
            if tok.kind == "EOF":
                if until:
                    raise self.error(f"expected {' or '.join(repr(u) for u in until)}", tok)
                return body
            if tok.kind == "KEYWORD" and tok.text in until:
                return body
            if tok.kind == "KEYWORD" and tok.text in ("end", "else") and not until:
                return body
            body.append(self.parse_statement())

    def skip_separators(self) -> None:
        while self.peek().kind == "NEWLINE" or self.at_op(",", ";"):
            self.advance()

    def parse_statement(self) -> Stmt:
        tok = self.peek()
        if tok.kind == "KEYWORD":
            if tok.text == "for":
                return self.parse_for()
            if tok.text == "if":
                return self.parse_if()
            raise self.error(f"'{tok.text}' is not valid here", tok)
        return self.parse_simple()

    def end_of_statement(self) -> bool:
        """Consume the statement terminator; True means echo is suppressed."""
        tok = self.peek()
        if tok.kind == "OP" and tok.text == ";":
            self.advance()
            return True
        if tok.kind == "OP" and tok.text == ",":
            self.advance()
            return False
        if tok.kind in ("NEWLINE", "EOF"):
            return False
        if tok.kind == "KEYWORD" and tok.text in ("end", "else"):
            return False
        raise self.error("expected end of statement", tok)

    def parse_for(self) -> For:
        kw = self.advance()
        tok = self.peek()
        if tok.kind != "IDENT":
            raise self.error("expected a loop variable after 'for'", tok)
        var = self.ident_name(self.advance())
        self.expect_op("=")
        iterable = self.parse_expr()
        body = self.parse_body(until=("end",))
        self.advance()  # 'end'
        return For(kw.line, kw.col, var, iterable, body)

    def parse_if(self) -> If:
        kw = self.advance()
        cond = self.parse_expr()
        then_body = self.parse_body(until=("else", "end"))
        else_body: list[Stmt] = []
        closer = self.advance()
        if closer.text == "else":
            else_body = self.parse_body(until=("end",))
            self.advance()  # 'end'
        return If(kw.line, kw.col, cond, then_body, else_body)

    def parse_simple(self) -> Stmt:
        tok = self.peek()
        if tok.kind == "IDENT":
            nxt = self.peek(1)
            if nxt.kind == "OP" and nxt.text == "=":
                name = self.ident_name(self.advance())
                self.advance()
                value = self.parse_expr()
                suppressed = self.end_of_statement()
                return Assign(tok.line, tok.col, name, value, echo=not suppressed)
            if nxt.kind == "OP" and nxt.text == "(" and self.assign_follows_parens():
                name = self.ident_name(self.advance())
                self.advance()  # '('
                indices = [self.parse_expr()]
                while self.at_op(","):
                    self.advance()
                    indices.append(self.parse_expr())
                self.expect_op(")")
                self.expect_op("=")
                value = self.parse_expr()
                suppressed = self.end_of_statement()
                return IndexedAssign(tok.line, tok.col, name, indices, value,
                                     echo=not suppressed)
        value = self.parse_expr()
        suppressed = self.end_of_statement()
        return ExprStmt(value.line, value.col, value, echo=not suppressed)

    def assign_follows_parens(self) -> bool:
        """From IDENT '(' ... ')' decide whether an '=' follows the parens."""
        i = self.pos + 1
        depth = 0
        while i < len(self.tokens):
            tok = self.tokens[i]
            if tok.kind == "OP" and tok.text in ("(", "["):
                depth += 1
            elif tok.kind == "OP" and tok.text in (")", "]"):
                depth -= 1
                if depth == 0:
                    after = self.tokens[i + 1] if i + 1 < len(self.tokens) else None
                    return (after is not None and after.kind == "OP"
                            and after.text == "=")
            elif tok.kind in ("NEWLINE", "EOF"):
                return False
            i += 1
        return False

    # --- expressions ---

    def parse_expr(self, in_matrix: bool = False) -> Expr:
        return self.parse_comparison(in_matrix)

    def parse_comparison(self, in_matrix: bool) -> Expr:
        left = self.parse_range(in_matrix)
        while self.at_op(*_COMPARISONS):
            op = self.advance()
            right = self.parse_range(in_matrix)
            left = BinOp(op.line, op.col, op.text, left, right)
        return left

    def parse_range(self, in_matrix: bool) -> Expr:
        start = self.parse_additive(in_matrix)
        if self.at_op(":"):
            colon = self.advance()
            stop = self.parse_additive(in_matrix)
            if self.at_op(":"):
                raise self.error("ranges take a single ':'")
            return Range(colon.line, colon.col, start, stop)
        return start

    def splits_element(self, tok: Token) -> bool:
        """In a bracket literal, '+'/'-' with space before but not after
        begins a new element instead of continuing this one."""
        return tok.space_before and not tok.space_after

    def parse_additive(self, in_matrix: bool) -> Expr:
        left = self.parse_multiplicative(in_matrix)
        while self.at_op("+", "-"):
            op = self.peek()
            if in_matrix and self.splits_element(op):
                break
            self.advance()
            right = self.parse_multiplicative(in_matrix)
            left = BinOp(op.line, op.col, op.text, left, right)
        return left

    def parse_multiplicative(self, in_matrix: bool) -> Expr:
        left = self.parse_unary(in_matrix)
        while self.at_op("*", "/"):
            op = self.advance()
            right = self.parse_unary(in_matrix)
            left = BinOp(op.line, op.col, op.text, left, right)
        return left

    def parse_unary(self, in_matrix: bool) -> Expr:
        if self.at_op("-", "+"):
            op = self.advance()
            operand = self.parse_unary(in_matrix)
            return UnaryOp(op.line, op.col, op.text, operand)
        return self.parse_postfix(in_matrix)

    def parse_postfix(self, in_matrix: bool) -> Expr:
        tok = self.peek()
        if tok.kind == "IDENT" and self.peek(1).kind == "OP" \
                and self.peek(1).text == "(":
            name = self.ident_name(self.advance())
            self.advance()  # '('
            args: list[Expr] = []
            if not self.at_op(")"):
                args.append(self.parse_expr())
                while self.at_op(","):
                    self.advance()
                    args.append(self.parse_expr())
            self.expect_op(")")
            return Call(tok.line, tok.col, name, args)
        return self.parse_primary(in_matrix)

    def parse_primary(self, in_matrix: bool) -> Expr:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.advance()
            return Num(tok.line, tok.col, float(tok.value))
        if tok.kind == "STRING":
            self.advance()
            return Str(tok.line, tok.col, str(tok.value))
        if tok.kind == "IDENT":
            self.advance()
            return Ident(tok.line, tok.col, self.ident_name(tok))
        if self.at_op("("):
            self.advance()
            inner = self.parse_expr()
            self.expect_op(")")
            return inner
        if self.at_op("["):
            return self.parse_matrix()
        raise self.error("expected an expression", tok)

    def parse_matrix(self) -> Matrix:
        bracket = self.advance()
        elements: list[Expr] = []
        while not self.at_op("]"):
            if self.peek().kind == "EOF":
                raise self.error("expected ']'")
            elements.append(self.parse_expr(in_matrix=True))
            if self.at_op(","):
                self.advance()
        self.advance()  # ']'
        return Matrix(bracket.line, bracket.col, elements)


def parse(source: str) -> Program:
    """Parse LabScript source into a Program; raises LabSyntaxError."""
    return _Parser(tokenize(source)).parse_program()


# --- unparsing, used by tests to check parse round trips ---

def unparse(program: Program) -> str:
    lines: list[str] = []
    for stmt in program.body:
        _unparse_stmt(stmt, lines, 0)
    return "\n".join(lines) + "\n"


def _unparse_stmt(stmt: Stmt, lines: list[str], indent: int) -> None:
    pad = "    " * indent
    if isinstance(stmt, Assign):
        tail = ";" if not stmt.echo else ""
        lines.append(f"{pad}{stmt.target} = {_unparse_expr(stmt.value)}{tail}")
    elif isinstance(stmt, IndexedAssign):
        tail = ";" if not stmt.echo else ""
        idx = ", ".join(_unparse_expr(e) for e in stmt.indices)
        lines.append(f"{pad}{stmt.target}({idx}) = {_unparse_expr(stmt.value)}{tail}")
    elif isinstance(stmt, ExprStmt):
        tail = ";" if not stmt.echo else ""
        lines.append(f"{pad}{_unparse_expr(stmt.value)}{tail}")
    elif isinstance(stmt, For):
        lines.append(f"{pad}for {stmt.var} = {_unparse_expr(stmt.iterable)}")
        for inner in stmt.body:
            _unparse_stmt(inner, lines, indent + 1)
        lines.append(f"{pad}end")
    elif isinstance(stmt, If):
        lines.append(f"{pad}if {_unparse_expr(stmt.cond)}")
        for inner in stmt.then_body:
            _unparse_stmt(inner, lines, indent + 1)
        if stmt.else_body:
            lines.append(f"{pad}else")
            for inner in stmt.else_body:
                _unparse_stmt(inner, lines, indent + 1)
        lines.append(f"{pad}end")
    else:
        raise TypeError(f"unknown statement {stmt!r}")


def _unparse_expr(expr: Expr) -> str:
    if isinstance(expr, Num):
        text = repr(expr.value)
        return text[:-2] if text.endswith(".0") else text
    if isinstance(expr, Str):
        return "'" + expr.value.replace("'", "''") + "'"
    if isinstance(expr, Ident):
        return expr.name
    if isinstance(expr, UnaryOp):
        return f"({expr.op}{_unparse_expr(expr.operand)})"
    if isinstance(expr, BinOp):
        return f"({_unparse_expr(expr.left)} {expr.op} {_unparse_expr(expr.right)})"
    if isinstance(expr, Range):
        return f"({_unparse_expr(expr.start)}:{_unparse_expr(expr.stop)})"
    if isinstance(expr, Matrix):
        return "[" + ", ".join(_unparse_expr(e) for e in expr.elements) + "]"
    if isinstance(expr, Call):
        return f"{expr.name}(" + ", ".join(_unparse_expr(e) for e in expr.args) + ")"
    raise TypeError(f"unknown expression {expr!r}")
