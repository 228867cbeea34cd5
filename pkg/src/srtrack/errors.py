"""Exception types raised across the package.

Everything derives from :class:`DomainError` so the CLI can map any of them
to exit status 1.
"""


class DomainError(ValueError):
    """Input violates a precondition of a numerical routine."""


class OutOfDomainError(DomainError):
    pass


class IncompatibleGridsError(DomainError):
    pass


class NotProjectiveCompatibleError(DomainError):
    pass


class PGMParseError(DomainError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class FieldFormatError(DomainError):
    pass


class BracketError(DomainError):
    def __init__(self, message: str, table=None):
        super().__init__(message)
        self.table = table if table is not None else []


class NotConvergedError(DomainError):
    """Raised by the eikonal solver; carries the partial solution."""

    def __init__(self, message: str, field=None, report=None):
        super().__init__(message)
        self.field = field
        self.report = report


class StalledError(DomainError):
    """Raised by backtracking; carries the partial curve."""

    def __init__(self, message: str, curve=None):
        super().__init__(message)
        self.curve = curve


class InconclusiveError(DomainError):
    pass
