"""Tokenizer for LabScript source.

Comments run from '%' to end of line. '...' continues a line. Newlines are
significant at nesting depth zero (statement separators) and plain
whitespace inside brackets/parens. Each token records its 1-based position
plus whether whitespace precedes/follows it; the bracket-literal parser
uses those flags to split space-separated elements the way the language's
users expect ([1 -2] is two elements, [1 - 2] is one).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import LabSyntaxError

KEYWORDS = {"for", "if", "else", "end"}

# longest first so '==' wins over '='
_OPERATORS = ["==", "~=", "<=", ">=", ".*", "./", "+", "-", "*", "/",
              "<", ">", "=", ":", ",", ";", "(", ")", "[", "]"]


@dataclass
class Token:
    kind: str            # NUMBER | STRING | IDENT | KEYWORD | OP | NEWLINE | EOF
    text: str
    line: int
    col: int
    value: float | str | None = None
    space_before: bool = field(default=False, compare=False)
    space_after: bool = field(default=False, compare=False)

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}, {self.line}:{self.col})"


def _is_ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_ident_char(c: str) -> bool:
    return c.isalnum() or c == "_"


class _Lexer:
    def __init__(self, source: str):
        self.src = source
        self.pos = 0
        self.line = 1
        self.col = 1
        self.tokens: list[Token] = []
        self.depth = 0          # ( and [ nesting; newlines inside are whitespace
        self.pending_space = False

    def error(self, message: str) -> LabSyntaxError:
        return LabSyntaxError(message, self.line, self.col)

    def peek(self, offset: int = 0) -> str:
        i = self.pos + offset
        return self.src[i] if i < len(self.src) else ""

    def advance(self) -> str:
        c = self.src[self.pos]
        self.pos += 1
        if c == "\n":
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return c

    def add(self, kind: str, text: str, line: int, col: int, value=None) -> None:
        self.tokens.append(Token(kind, text, line, col, value=value,
                                 space_before=self.pending_space))
        self.pending_space = False

    def run(self) -> list[Token]:
        while self.pos < len(self.src):
            c = self.peek()
            if c == "%":
                while self.pos < len(self.src) and self.peek() != "\n":
                    self.advance()
                continue
            if c == "." and self.peek(1) == "." and self.peek(2) == ".":
                # line continuation: swallow through the newline
                while self.pos < len(self.src) and self.peek() != "\n":
                    self.advance()
                if self.pos < len(self.src):
                    self.advance()
                self.pending_space = True
                continue
            if c == "\n":
                self.advance()
                if self.depth == 0:
                    if self.tokens and self.tokens[-1].kind not in ("NEWLINE",):
                        self.add("NEWLINE", "\n", self.line - 1, 1)
                else:
                    self.pending_space = True
                continue
            if c in " \t\r":
                self.advance()
                self.pending_space = True
                continue
            if c.isdigit() or (c == "." and self.peek(1).isdigit()):
                self.lex_number()
                continue
            if c == "'":
                self.lex_string()
                continue
            if _is_ident_start(c):
                self.lex_ident()
                continue
            op = self.match_operator()
            if op is not None:
                continue
            raise self.error(f"illegal character {c!r}")
        # mark space_after flags and terminate
        for i, tok in enumerate(self.tokens[:-1]):
            tok.space_after = self.tokens[i + 1].space_before
        if self.tokens:
            self.tokens[-1].space_after = True
        self.tokens.append(Token("EOF", "", self.line, self.col))
        return self.tokens

    def lex_number(self) -> None:
        line, col = self.line, self.col
        start = self.pos
        while self.peek().isdigit():
            self.advance()
        if self.peek() == "." and self.peek(1).isdigit():
            self.advance()
            while self.peek().isdigit():
                self.advance()
        elif self.peek() == "." and not (self.peek(1) == "." and self.peek(2) == "."):
            # trailing dot as in "2." but not the continuation "..."
            nxt = self.peek(1)
            if not _is_ident_start(nxt):
                self.advance()
        if self.peek() and self.peek() in "eE":
            save, save_col = self.pos, self.col
            self.advance()
            if self.peek() and self.peek() in "+-":
                self.advance()
            if self.peek().isdigit():
                while self.peek().isdigit():
                    self.advance()
            else:
                self.pos, self.col = save, save_col  # not an exponent
        text = self.src[start:self.pos]
        try:
            value = float(text)
        except ValueError:
            raise self.error(f"bad number literal {text!r}") from None
        if value != value or value in (float("inf"), float("-inf")):
            raise self.error(f"number literal out of range: {text}")
        self.add("NUMBER", text, line, col, value=value)

    def lex_string(self) -> None:
        line, col = self.line, self.col
        self.advance()  # opening quote
        chars: list[str] = []
        while True:
            if self.pos >= len(self.src) or self.peek() == "\n":
                raise LabSyntaxError("unterminated string literal", line, col)
            c = self.advance()
            if c == "'":
                if self.peek() == "'":   # doubled quote escapes itself
                    chars.append("'")
                    self.advance()
                    continue
                break
            chars.append(c)
        text = "".join(chars)
        self.add("STRING", text, line, col, value=text)

    def lex_ident(self) -> None:
        line, col = self.line, self.col
        start = self.pos
        while self.pos < len(self.src) and _is_ident_char(self.peek()):
            self.advance()
        text = self.src[start:self.pos]
        kind = "KEYWORD" if text in KEYWORDS else "IDENT"
        self.add(kind, text, line, col)

    def match_operator(self) -> str | None:
        for op in _OPERATORS:
            if self.src.startswith(op, self.pos):
                line, col = self.line, self.col
                for _ in op:
                    self.advance()
                if op in ("(", "["):
                    self.depth += 1
                elif op in (")", "]"):
                    self.depth = max(0, self.depth - 1)
                canonical = {"." + c: c for c in "*/"}.get(op, op)
                self.add("OP", canonical, line, col)
                return op
        return None


def tokenize(source: str) -> list[Token]:
    """Tokenize LabScript source; raises LabSyntaxError with position."""
    return _Lexer(source).run()
