"""Exception hierarchy shared by all modules."""


class SemigroupLabError(Exception):
    """Base class for every error raised by this package."""


class NonPositiveSymbol(SemigroupLabError, ValueError):
    pass


class OutOfDomain(SemigroupLabError, ValueError):
    pass


class WindowTooSmall(SemigroupLabError, ValueError):
    pass


class NonGridTranslation(SemigroupLabError, ValueError):
    pass


class GridMismatch(SemigroupLabError, ValueError):
    pass


class NotSingleTerm(SemigroupLabError, ValueError):
    pass


class TooLarge(SemigroupLabError, ValueError):
    pass


class NotCommuting(SemigroupLabError, ValueError):
    pass


class NotLeftInvertible(SemigroupLabError, ValueError):
    pass


class NotJointlyLeftInvertible(SemigroupLabError, ValueError):
    pass


class DualNotCommuting(SemigroupLabError, ValueError):
    pass


class TruncationExceedsGrid(SemigroupLabError, ValueError):
    pass


class OutsidePolydisc(SemigroupLabError, ValueError):
    pass


class ParseError(SemigroupLabError, ValueError):
    """Malformed config text; carries the line and column when known."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


class ValidationError(SemigroupLabError, ValueError):
    """Well-formed config with an invalid field."""

    def __init__(self, message, field=None, kind=None):
        self.field = field
        self.kind = kind
        prefix = f"{field}: " if field else ""
        super().__init__(prefix + message)
