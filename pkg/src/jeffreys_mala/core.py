"""Model abstraction and the constrained parameter space.

Parameter vectors are plain 1-D float64 arrays; ``as_params`` is the validating
constructor used at API boundaries.  Models are small classes exposing
``simulate`` / per-observation ``log_density`` + ``score`` (static models) or a
state-space description consumed by :mod:`jeffreys_mala.particle` (dynamical
models).  Exactly one FIM capability per model decides which route the
potential provider takes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, DomainError

__all__ = [
    "FimCapability",
    "BoxConstraint",
    "ObservationBatch",
    "Model",
    "as_params",
]


class FimCapability(enum.Enum):
    """How a model's Fisher information is obtained."""

    ANALYTIC = "analytic"
    EMPIRICAL_SCORE = "empirical_score"
    PARTICLE_FILTER = "particle_filter"


def as_params(values, dim: int | None = None) -> np.ndarray:
    """Validate and return a parameter vector as a float64 array.

    Raises ContractViolationError on empty/non-finite input or a dimension
    mismatch with ``dim``.
    """
    theta = np.atleast_1d(np.asarray(values, dtype=np.float64))
    if theta.ndim != 1 or theta.size < 1:
        raise ContractViolationError("parameter vector must be 1-D with d >= 1")
    if not np.all(np.isfinite(theta)):
        raise ContractViolationError(f"parameter vector has non-finite entries: {theta}")
    if dim is not None and theta.size != dim:
        raise ContractViolationError(f"expected dimension {dim}, got {theta.size}")
    return theta


@dataclass(frozen=True)
class BoxConstraint:
    """Axis-aligned box; membership is closed-interval per coordinate."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=np.float64))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ContractViolationError("lower/upper must be 1-D arrays of equal length")
        if not np.all(lo < hi):
            raise ContractViolationError(f"need lower < upper per coordinate, got {lo} vs {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def widths(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, theta: np.ndarray) -> bool:
        theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
        if theta.shape != self.lower.shape:
            raise ContractViolationError(
                f"dimension mismatch: constraint is {self.dim}-D, point is {theta.size}-D"
            )
        return bool(np.all(theta >= self.lower) and np.all(theta <= self.upper))

    def expand(self, margin: float) -> "BoxConstraint":
        """Box grown by ``margin`` on each side."""
        return BoxConstraint(self.lower - margin, self.upper + margin)

    def intersect(self, other: "BoxConstraint") -> "BoxConstraint":
        return BoxConstraint(
            np.maximum(self.lower, other.lower), np.minimum(self.upper, other.upper)
        )


def contains(constraint: BoxConstraint, theta) -> bool:
    """Functional alias for BoxConstraint.contains."""
    return constraint.contains(np.asarray(theta, dtype=np.float64))


@dataclass
class ObservationBatch:
    """Dense batch of observations, optionally with exogenous inputs.

    ``observations`` is (n,) or (n, m); ``inputs``, when present, has the same
    leading length n (one input per transition for dynamical models).
    """

    observations: np.ndarray
    inputs: np.ndarray | None = None

    def __post_init__(self):
        y = np.asarray(self.observations, dtype=np.float64)
        if y.shape[0] < 1:
            raise ContractViolationError("observation batch must be nonempty")
        self.observations = y
        if self.inputs is not None:
            u = np.asarray(self.inputs, dtype=np.float64)
            if u.shape[0] != y.shape[0]:
                raise ContractViolationError(
                    f"inputs length {u.shape[0]} != observations length {y.shape[0]}"
                )
            self.inputs = u

    def __len__(self) -> int:
        return self.observations.shape[0]


class Model:
    """Base class for parametric models.

    Subclasses set ``dim``, ``parameter_names``, ``capability`` and a
    ``physical_domain`` (hard support limits for the parameters, or None).
    Static models implement ``simulate``, ``log_density`` and ``score``;
    dynamical models implement ``simulate`` and ``nlss`` (state-space
    description for the particle module).

    All operations are pure given (theta, inputs, rng) and safe to call
    concurrently; mutation is confined to caller-owned rng streams.
    """

    dim: int = 1
    parameter_names: tuple[str, ...] = ("theta",)
    capability: FimCapability = FimCapability.EMPIRICAL_SCORE
    physical_domain: BoxConstraint | None = None

    def check_theta(self, theta) -> np.ndarray:
        theta = as_params(theta, self.dim)
        if self.physical_domain is not None and not self.physical_domain.contains(theta):
            raise DomainError(
                f"{type(self).__name__}: theta={theta} outside admissible domain "
                f"[{self.physical_domain.lower}, {self.physical_domain.upper}]"
            )
        return theta

    def evaluation_domain(self, constraint: BoxConstraint, delta: float) -> BoxConstraint:
        """Box on which FIM evaluations must stay well-defined.

        The sampling constraint grown by 10*delta per side so that perturbed
        points theta + delta*mu remain evaluable, clipped to the model's hard
        support limits.
        """
        box = constraint.expand(10.0 * float(delta))
        if self.physical_domain is not None:
            box = box.intersect(self.physical_domain)
        return box

    def simulate(self, theta, n: int, rng: np.random.Generator) -> ObservationBatch:
        raise NotImplementedError

    def log_density(self, theta, y) -> float:
        raise NotImplementedError

    def score(self, theta, y) -> np.ndarray:
        raise NotImplementedError
