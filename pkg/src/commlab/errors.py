"""Error types shared across the interpreter, grader and service."""

from __future__ import annotations


class LabError(Exception):
    """Base class for errors raised while processing a LabScript program.

    Carries an optional 1-based source position so feedback can point at
    the offending line.
    """

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col

    def located(self) -> str:
        if self.line is None:
            return self.message
        if self.col is None:
            return f"{self.message} (line {self.line})"
        return f"{self.message} (line {self.line}, column {self.col})"


class LabSyntaxError(LabError):
    """Lexical or grammatical error; the program never ran."""


class LabRuntimeError(LabError):
    """Error raised while a script executes (undefined name, bad index, ...)."""


class ResourceLimitError(LabError):
    """A sandbox cap was hit (steps, vector length, figure count)."""


class AuthoringError(Exception):
    """A task's own reference material is broken.

    Never attributed to a student submission; surfaces as an internal error.
    """
