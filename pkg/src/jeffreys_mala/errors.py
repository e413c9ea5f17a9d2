"""Semantic exception hierarchy shared across the package."""


class JeffreysMalaError(Exception):
    """Base class for all package errors."""


class ContractViolationError(JeffreysMalaError, ValueError):
    """An argument violates a documented precondition (dimension mismatch, empty input, ...)."""


class DomainError(JeffreysMalaError, ValueError):
    """Parameter value outside the model's admissible domain."""


class SupportError(JeffreysMalaError, ValueError):
    """Observation outside the model's support."""


class SingularFimError(JeffreysMalaError):
    """Fisher information matrix is singular / not positive definite where a
    log-determinant is required.  Samplers treat this as an automatic rejection."""


class DomainExhaustedError(JeffreysMalaError):
    """All perturbation-direction redraws left the evaluation domain."""


class DegenerateFilterError(JeffreysMalaError):
    """All particle weights underflowed to zero at some time step."""

    def __init__(self, t: int, message: str | None = None):
        self.t = t
        super().__init__(message or f"all particle weights vanished at time step {t}")


class DegenerateSmootherError(JeffreysMalaError):
    """Backward-smoothing denominator vanished."""


class EstimationFailedError(JeffreysMalaError):
    """Too many replicate estimation runs failed to produce a usable estimate."""


class ChainInitError(JeffreysMalaError):
    """The potential could not be evaluated at the chain's starting point."""
