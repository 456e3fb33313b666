"""Exception hierarchy."""


class SublogError(Exception):
    """Base class for all library errors."""


class WindowViolation(SublogError, ValueError):
    pass


class IndexOutOfRange(SublogError, IndexError):
    pass


class DegenerateData(SublogError, ValueError):
    pass


class EmptyInput(SublogError, ValueError):
    pass


class UnboundedPdf(SublogError, ValueError):
    pass


class InvalidDomain(SublogError, ValueError):
    pass


class DegenerateInterval(SublogError, ValueError):
    """Conditional CDF undefined on the interval; callers fall back to binary search."""


class InvalidRange(SublogError, ValueError):
    pass


class SpecParseError(SublogError, ValueError):
    pass


class BadHeader(SublogError, ValueError):
    pass


class TruncatedFile(SublogError, ValueError):
    pass


class NTooLarge(SublogError, ValueError):
    pass


class VersionMismatch(SublogError, ValueError):
    pass


class PieceCapExceeded(SublogError, ValueError):
    pass


class ExactnessViolation(SublogError, AssertionError):
    """An index answer disagreed with the rank oracle."""
