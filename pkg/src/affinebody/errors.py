"""Exception hierarchy for the affinebody package."""

from __future__ import annotations


class AffineBodyError(Exception):
    """Base class for all affinebody errors."""


class SingularPlacementError(AffineBodyError):
    """Placement matrix is singular (or too close to singular to invert)."""


class DegenerateSpectrumError(AffineBodyError):
    """Two principal stretches coincide where distinctness is required.

    Carries an optional ``checkpoint`` with the last valid state so the
    caller can resume after repairing the initial data.
    """

    def __init__(self, message: str, checkpoint=None):
        super().__init__(message)
        self.checkpoint = checkpoint


class AsymmetricInputError(AffineBodyError):
    """A matrix that must be metric-symmetric is not, beyond tolerance."""


class TangencyViolationError(AffineBodyError):
    """Factor rates are not tangent to the orthonormality constraints."""


class ReprPreconditionError(AffineBodyError):
    """Requested kinetic-energy representation is not applicable."""


class FrameMismatchError(AffineBodyError):
    """Decomposition factors do not belong to the torque's configuration."""


class NegativeDeterminantError(AffineBodyError):
    """Placement determinant is non-positive where positivity is required."""


class InconsistentInitialDataError(AffineBodyError):
    """Initial velocities violate the velocity constraint beyond tolerance."""


class SingularSaddleError(AffineBodyError):
    """Constrained saddle-point system is rank deficient."""


class WindowTooShortError(AffineBodyError):
    """A trajectory window has too few samples for finite differencing."""


class IsotropyViolationError(AffineBodyError):
    """Force model lacks the isotropy a reduced scheme requires."""


class ProjectionFailedError(AffineBodyError):
    """State is too far from the constraint manifold to project back."""


class StepRejectedError(AffineBodyError):
    """A monitored quantity became non-finite during time stepping."""


class SchemaError(AffineBodyError):
    """Scenario configuration failed validation.

    ``violations`` is a list of (key path, reason) pairs covering every
    problem found, not just the first.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(f"{path}: {reason}" for path, reason in self.violations)
        super().__init__(f"invalid scenario config: {lines}")
