"""Exception types shared across the package."""


class HwaveError(Exception):
    """Base class for all package errors."""


class NonConvergence(HwaveError):
    """A quadrature or series failed to reach the requested tolerance."""


class NonFinite(HwaveError):
    """An integrand or operand produced nan/inf."""


class DomainError(HwaveError, ValueError):
    """Argument outside the mathematical domain of the operation."""


class PoleError(DomainError):
    """Evaluation requested exactly at an excluded pole."""


class SingularityError(DomainError):
    """Evaluation requested at a non-removable singularity."""


class BranchError(DomainError):
    """Evaluation on a degenerate locus of a branched closed form."""


class AliasError(HwaveError):
    """Spectral content exceeds what the target grid can represent."""


class ZeroField(HwaveError, ValueError):
    """A functional of a field was requested for the zero field."""


class NoConvergence(HwaveError):
    """An iterative solver stopped before meeting its tolerance."""


class OrthogonalityViolation(HwaveError):
    """A required orthogonality precondition does not hold."""


class CoercivityViolation(HwaveError):
    """The assembled coercivity constant came out >= 1/2 (implementation bug)."""


class DegenerateSample(HwaveError):
    """A random draw was annihilated by the constraint projection."""


class SingularSystem(HwaveError):
    """A linear system to be solved is numerically singular."""


class TruncationWarning(UserWarning):
    """A truncated quantity maybe insufficiently resolved; result still returned."""
