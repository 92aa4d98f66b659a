"""Exception types raised by the solvers."""


class ChoquardError(Exception):
    """Base class for all package errors."""


class ShootingBracketError(ChoquardError):
    """The bisection for the decaying ground-state branch could not be bracketed."""


class NonMonotoneProfileError(ChoquardError):
    """A computed radial profile is not positive and strictly decreasing."""


class ConvergenceError(ChoquardError):
    """An iterative solver failed to reach its tolerance."""


class TruncationActiveError(ChoquardError):
    """The field left the region where the truncation acts as the identity."""


class BoxError(ChoquardError):
    """Mismatched or inadequate computational boxes."""


class AdmissibilityError(ChoquardError):
    """A parameter lies outside the admissible set (e.g. |eps*xi| >= 1)."""


class DegenerateGramError(ChoquardError):
    """The tangent Gram matrix is singular or badly conditioned."""


class PotentialSpecError(ChoquardError):
    """A potential violates its declared bounds on the verification lattice."""


class ConfigError(ChoquardError):
    """Invalid run configuration."""
