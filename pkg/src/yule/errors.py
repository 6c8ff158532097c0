"""Exception hierarchy shared by all yule modules."""


class YuleError(Exception):
    """Base class for errors raised by this package."""


class DomainError(YuleError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericError(YuleError):
    """A numerical routine failed (overflow, non-convergence of a solver).

    The optional ``n`` attribute records the walk length involved.
    """

    def __init__(self, message, n=None):
        super().__init__(message)
        self.n = n


class ConvergenceError(NumericError):
    """Adaptive quadrature exhausted its budget before reaching tolerance.

    ``partial`` holds the best available result so callers can inspect it.
    """

    def __init__(self, message, partial=None, n=None):
        super().__init__(message, n=n)
        self.partial = partial


class DivergenceError(NumericError):
    """The requested integral does not converge (non-integrable tail)."""
