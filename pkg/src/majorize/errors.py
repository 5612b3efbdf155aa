"""Exception hierarchy shared by all modules."""

from __future__ import annotations

from typing import Any


class MajorizeError(Exception):
    """Base class. ``witness`` carries data sufficient to replay the failure."""

    def __init__(self, message: str, witness: Any = None):
        super().__init__(message)
        self.witness = witness


class EmptySequence(MajorizeError):
    pass


class ClassMismatch(MajorizeError):
    pass


class MalformedFamily(MajorizeError):
    pass


class PreconditionFailed(MajorizeError):
    pass


class NotApplicable(MajorizeError):
    pass


class NotDoublyStochastic(MajorizeError):
    pass


class CompletionImpossible(MajorizeError):
    pass


class BudgetExceeded(MajorizeError):
    pass


class DomainViolation(MajorizeError):
    pass


class Infeasible(MajorizeError):
    pass
