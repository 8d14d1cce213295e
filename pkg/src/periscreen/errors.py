"""Exception types shared across the pipeline."""


class PeriscreenError(Exception):
    """Base class for all package errors."""


class ValidationError(PeriscreenError, ValueError):
    """A value or record violates a documented contract."""


class SchemaError(ValidationError):
    """An input file violates its schema. Carries file/line context."""

    def __init__(self, message: str, *, source: str | None = None, line: int | None = None):
        loc = source or ""
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.source = source
        self.line = line


class ConvergenceError(PeriscreenError, ArithmeticError):
    """An iterative numeric routine failed to converge within its budget."""
