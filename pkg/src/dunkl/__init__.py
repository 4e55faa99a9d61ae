"""Evaluation and sharp-estimate certification of W-invariant Dunkl
(spherical), heat, Newton and s-stable kernels for root systems of type A
with arbitrary positive multiplicity."""

__version__ = "0.1.0"

from .errors import (AccuracyError, BudgetExceededError, DegenerateArgumentError,
                     DivergentTailError, DomainError, DunklError,
                     EvaluationError, InvalidExponentError, SingularityError)
from .quad import KernelValue, NestedDomain, QuadratureSpec
from .report import RatioReport
from .rootsys import ChamberPoint, RootSystemA, rootsystem

__all__ = [
    "AccuracyError", "BudgetExceededError", "ChamberPoint",
    "DegenerateArgumentError", "DivergentTailError", "DomainError",
    "DunklError", "EvaluationError", "InvalidExponentError", "KernelValue",
    "NestedDomain", "QuadratureSpec", "RatioReport", "RootSystemA",
    "SingularityError", "rootsystem", "__version__",
]
