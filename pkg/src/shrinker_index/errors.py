"""Exception types raised by the package."""


class ProfileError(ValueError):
    """A profile curve fails validation (bad samples, spacing or residual)."""


class EmptyDomainError(ProfileError):
    """Truncation removed every sample."""


class NoOrbitFound(RuntimeError):
    """Shooting found no sign change of the mismatch in the bracket."""


class BoundaryConditionError(ValueError):
    """An unsupported boundary policy was requested for a curve."""


class SolverError(RuntimeError):
    """An eigen- or optimisation solve failed to converge."""
