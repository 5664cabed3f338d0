"""Exceptions raised by the vna calculator."""

from __future__ import annotations


class VnaError(Exception):
    """Base class for errors raised on purpose by this package."""


class ValidationError(VnaError):
    """One or more descriptions violate their invariants."""

    def __init__(self, problems: list[str]) -> None:
        self.problems = list(problems)
        super().__init__("; ".join(self.problems) or "invalid description")


class ParseError(VnaError):
    """Problem text does not follow the description language."""

    def __init__(self, message: str, line: int, column: int) -> None:
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class EngineError(VnaError):
    """A rewrite step was asked to run outside its preconditions."""


class ShapeMismatch(VnaError):
    """The inputs do not have a closed-form product shape."""
