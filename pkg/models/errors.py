"""
Exception types raised by the simulator and the solvers.
"""


class BdrisError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(BdrisError, ValueError):
    """An argument or configuration value violates a documented precondition."""


class NumericalFailureError(BdrisError, ArithmeticError):
    """A solver produced non-finite values or could not make progress."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration

    def __str__(self):
        base = super().__str__()
        if self.iteration is None:
            return base
        return f"{base} (iteration {self.iteration})"
