"""Exception hierarchy.

Errors split into two families so the command line can map them onto exit
codes: bad input (2) and numerical failure (3).
"""


class TameGeoError(Exception):
    """Base class for every error raised by the package."""


class InputError(TameGeoError, ValueError):
    """Malformed or inconsistent input (dimension mismatch, bad schema...)."""


class DimensionMismatch(InputError):
    pass


class ExprDomainError(InputError):
    """An expression was evaluated outside the domain of one of its primitives."""

    def __init__(self, message, index=None, point=None):
        super().__init__(message)
        self.index = index
        self.point = point


class NumericalError(TameGeoError, ArithmeticError):
    """A numerical procedure could not produce a trustworthy answer."""


class ConvergenceError(NumericalError):
    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class EmptySetError(NumericalError):
    """An operation needed a nonempty sampled set and got an empty one."""


class EmptySectionError(EmptySetError):
    def __init__(self, message, side=None):
        super().__init__(message)
        self.side = side


class FitError(NumericalError):
    """Exponent fit rejected: sparse bins, degenerate data, cone detected..."""


class OutsideDomainError(InputError):
    """A query point has an empty sampled section (or is isolated in the domain)."""
