"""Exception types shared across the package."""


class AncmmError(Exception):
    """Base class for all errors raised by :mod:`ancmm`."""


class NonConvergence(AncmmError):
    """An iterative routine hit its iteration cap or produced non-finite values.

    ``iterations`` and ``residual`` carry the state at the point of failure.
    """

    def __init__(self, message, iterations=None, residual=None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class InvalidOmega(AncmmError, ValueError):
    pass


class DegenerateRow(AncmmError, ValueError):
    """A cost row has too many ties to admit an exact neighbour count."""


class ConfigError(AncmmError, ValueError):
    pass


class ParseError(AncmmError, ValueError):
    """Malformed CSV input. ``line`` and ``column`` are 1-based."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class ShapeError(AncmmError, ValueError):
    pass
