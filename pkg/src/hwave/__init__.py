"""Numerical toolkit for radial fields on the Heisenberg group: band
spectral decomposition, ground-state traveling-wave solvers, Bergman-space
projections, and coercivity verification of the linearized operator around
the limiting profile."""

from . import bergman, heisenberg, kernels, linearized, numerics, spectral, variational
from .errors import (
    AliasError,
    BranchError,
    CoercivityViolation,
    DegenerateSample,
    DomainError,
    HwaveError,
    NoConvergence,
    NonConvergence,
    NonFinite,
    OrthogonalityViolation,
    PoleError,
    SingularityError,
    SingularSystem,
    TruncationWarning,
    ZeroField,
)
from .numerics import QuadratureSpec, gamma, integrate_halfline, integrate_uhp, log0
from .spectral import BandField, GridField, SigmaProfile

__version__ = "0.1.0"
