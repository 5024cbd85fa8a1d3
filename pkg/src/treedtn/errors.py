"""Exception hierarchy.

Precondition problems derive from ``ValueError`` so callers that only care
about "bad input" can catch that.
"""


class TreeDtnError(Exception):
    """Base class for all package errors."""


class DomainError(TreeDtnError, ValueError):
    """An argument lies outside the domain of an operation."""


class SingularPointError(DomainError):
    """Evaluation requested exactly at a kernel singularity."""


class NoBoundedSolutionError(DomainError):
    """The Dirichlet problem has no bounded solution for this parameter."""


class HypothesisError(DomainError):
    """A closed form was requested outside the hypotheses it is proved under."""


class UnsupportedOperationError(TreeDtnError, TypeError):
    """The datum representation does not support the requested operation."""


class ToleranceNotMetError(TreeDtnError):
    """Quadrature or differentiation could not reach the requested tolerance."""

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class InvariantError(TreeDtnError):
    """A checked invariant was violated."""
