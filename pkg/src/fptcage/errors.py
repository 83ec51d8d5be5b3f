"""Exception and warning types shared across the package."""


class FptError(Exception):
    """Base class for all package errors."""


class DomainError(FptError, ValueError):
    """A precondition on the arguments was violated."""


class NumericError(FptError, ArithmeticError):
    """A numerical routine could not reach its accuracy target.

    The optional ``context`` dict carries the offending inputs
    (e.g. the order and argument of a special-function call).
    """

    def __init__(self, message, context=None):
        super().__init__(message)
        self.context = dict(context) if context else {}


class ConvergenceError(NumericError):
    """A truncated expansion failed to settle within its tolerance."""


class AccuracyWarning(UserWarning):
    """A result was returned, but an accuracy diagnostic tripped."""
