"""Exception hierarchy shared by all modules."""


class RodError(Exception):
    """Base class for library errors."""


class DomainError(RodError, ValueError):
    """An argument lies outside the domain of the operation."""


class DivergenceError(DomainError):
    """The requested quantity diverges (e.g. K(1))."""


class StripError(DomainError):
    """A theta-function argument lies outside the convergence strip."""


class UndefinedLimitError(DomainError):
    """A boundary limit that does not exist was requested."""


class NoSolutionError(RodError):
    """A root search found no sign change.

    ``bracket`` holds the (argument, value) pairs that were examined.
    """

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket or []


class ConvergenceError(RodError):
    """An iterative procedure failed to reach its tolerance."""


class PrecisionWarning(RuntimeWarning):
    """Results are computed but accuracy is degraded."""
