"""Exception hierarchy and source diagnostics shared by every engine."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceLocation:
    file: str
    line: int
    column: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    location: SourceLocation

    def __str__(self) -> str:
        return f"{self.location}: {self.severity}: {self.message}"


class EpsiliteError(Exception):
    pass


class ParseError(EpsiliteError):
    """Raised when a source text fails to parse; carries every diagnostic found."""

    def __init__(self, diagnostics: list[Diagnostic]):
        assert diagnostics
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


class ModelError(EpsiliteError):
    pass


class AccessViolation(ModelError):
    pass


class EvalError(EpsiliteError):
    """A runtime error raised while executing a script.

    ``location`` points at the innermost construct that failed.
    """

    def __init__(self, message: str, location: SourceLocation | None = None):
        self.message = message
        self.location = location
        if location is not None:
            super().__init__(f"{location}: {message}")
        else:
            super().__init__(message)

    @property
    def is_access_violation(self) -> bool:
        return isinstance(self.__cause__, AccessViolation)
