"""Exception hierarchy.

Two branches matter to callers: ``ValidationError`` (bad inputs or model
properties, CLI exit code 2) and ``NumericalGuard`` (a computation refused to
continue past a configured safety bound, CLI exit code 3).
"""


class UrnLabError(Exception):
    """Base class for all library errors."""


class ValidationError(UrnLabError):
    """Invalid input, configuration, or model property."""


class NumericalGuard(UrnLabError):
    """A numerical safety bound was hit; results would not be trustworthy."""


class InvalidSpec(ValidationError):
    """Malformed model or configuration specification."""


class DomainError(ValidationError):
    """Argument outside the supported domain of an operation."""


class TooLarge(ValidationError):
    """Problem size exceeds the cap of an intentionally small-scale routine."""


class SigmaNotPositiveDefinite(ValidationError):
    """Second-moment matrix of the increments is (near) singular."""


class DegenerateSigma(ValidationError):
    """Increment distribution has no randomness in some direction."""


class NotLatticeValued(ValidationError):
    """No arithmetic progression carrying the support could be found."""


class RankDeficient(ValidationError):
    """Support differences do not span a full-rank lattice."""


class LatticeMismatch(ValidationError):
    """Law mass found off the declared lattice."""


class BudgetExceeded(NumericalGuard):
    """Total pruned probability mass would exceed the configured budget."""


class SupportCapExceeded(NumericalGuard):
    """Law support grew past the configured memory cap."""


class WindowTooSmall(NumericalGuard):
    """Requested inversion grid cannot contain the law's support window."""


class GammaPole(NumericalGuard):
    """Gamma function evaluated at a non-positive integer."""


class OverflowGuard(NumericalGuard):
    """Intermediate quantity left double-precision range."""
