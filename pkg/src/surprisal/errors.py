"""Exception hierarchy.

``InputError`` covers malformed or inconsistent user input (CLI exit 2);
``DomainError`` covers arguments outside a function's mathematical domain
(CLI exit 3).  ``SaturationError`` is the domain error raised when a
probability underflows the smallest positive double.
"""


class SurprisalError(Exception):
    """Base class for all package errors."""


class InputError(SurprisalError, ValueError):
    pass


class ParseError(InputError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at line/record {position})"
        super().__init__(message)


class ValidationError(InputError):
    def __init__(self, message: str, field: str | None = None, row: int | None = None):
        self.field = field
        self.row = row
        prefix = []
        if row is not None:
            prefix.append(f"row {row}")
        if field is not None:
            prefix.append(f"field '{field}'")
        if prefix:
            message = ", ".join(prefix) + ": " + message
        super().__init__(message)


class DomainError(SurprisalError, ValueError):
    pass


class SaturationError(DomainError):
    def __init__(self, message: str, boundary: float):
        self.boundary = boundary
        super().__init__(f"{message} (clamp boundary {boundary!r})")
