"""Exception types shared across the package."""

from __future__ import annotations


class DunklError(Exception):
    """Base class for all package errors."""


class DomainError(DunklError, ValueError):
    """An argument violates an operation's precondition."""


class SingularityError(DomainError):
    """Evaluation requested exactly on a singular locus (e.g. X == Y)."""


class DegenerateArgumentError(DomainError):
    """Repeated entries where a closed form requires distinct ones."""


class InvalidExponentError(DomainError):
    """Jacobi/Laguerre weight exponent <= -1."""


class BudgetExceededError(DunklError):
    """Predicted evaluation count exceeds the configured cap."""


class EvaluationError(DunklError):
    """The integrand returned a non-finite value; carries the node location."""

    def __init__(self, message: str, location=None):
        super().__init__(message)
        self.location = location


class AccuracyError(DunklError):
    """A quadrature/inversion path cannot reach a usable accuracy here."""


class DivergentTailError(DomainError):
    """The requested improper integral diverges for these parameters."""
