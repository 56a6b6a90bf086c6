"""Exception hierarchy shared by every evcs module."""


class EvcsError(Exception):
    """Base class for all library errors."""


class FeasibilityError(EvcsError, ValueError):
    """An EV window, energy need or schedule cannot be satisfied."""


class DimensionError(EvcsError, ValueError):
    """Sequences that must share a time grid do not."""


class DomainError(EvcsError, ValueError):
    """A value lies outside the domain an operation accepts."""


class ConfigError(EvcsError, ValueError):
    """Inconsistent or incomplete configuration."""


class ModeError(EvcsError, ValueError):
    """Operation called under a game mode it does not cover."""


class CalibrationError(EvcsError, RuntimeError):
    pass


class SearchRefusedError(EvcsError, RuntimeError):
    """Exhaustive search would exceed the allowed budget."""


class SignConventionError(EvcsError, ArithmeticError):
    pass


class PreconditionError(EvcsError, ValueError):
    pass


class ParseError(EvcsError, ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
