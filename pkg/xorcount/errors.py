"""Exception hierarchy for the counting library."""


class XorCountError(Exception):
    """Base class for every error raised by xorcount."""


class ParameterError(XorCountError, ValueError):
    """A numeric parameter is outside its valid range."""


class DimensionError(XorCountError, ValueError):
    """Bit widths of a hash, assignment or problem disagree."""


class DomainError(XorCountError, ValueError):
    """A combinatorial function was evaluated outside its domain."""


class CapacityError(XorCountError):
    """An exact enumeration would exceed its configured size limit."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ProtocolError(XorCountError):
    """An external solver produced output that does not follow the solution protocol."""


class IntegrityError(XorCountError):
    """A solver witness failed the in-process recheck."""


class SpecFormatError(XorCountError, ValueError):
    """A DIMACS, table or explicit-set file could not be parsed."""


class InconclusiveError(XorCountError):
    """Some oracle trials returned unknown, so no certificate can be issued."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
