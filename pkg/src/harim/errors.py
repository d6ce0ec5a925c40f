"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: any :class:`HarimError` is an input
problem (exit 2) except :class:`DegenerateStatError`, which marks a
statistically undefined result (exit 3).
"""


class HarimError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(HarimError):
    """A value or configuration violates a documented invariant."""


class FormatError(ValidationError):
    """A file does not match its expected format.

    Carries the offending path and, when known, the 1-based line number.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}: "
            if line is not None:
                where = f"{path}:{line}: "
        super().__init__(where + message)


class JoinError(HarimError):
    """Score table and annotation set do not cover the same example ids."""


class DegenerateStatError(HarimError):
    """A correlation is undefined (a constant vector, or too few points)."""
