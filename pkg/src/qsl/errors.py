"""Exception and warning types shared across the package."""


class ContractError(ValueError):
    """A caller violated an operation's preconditions."""


class InvalidStateError(ContractError):
    """A matrix fails the density-matrix requirements beyond tolerance."""


class DegenerateDriveError(RuntimeError):
    """Coherent drive inside a degenerate eigenvalue block cannot be inverted."""


class IntegrationDivergedError(RuntimeError):
    """The integrator produced a state with an eigenvalue below the floor."""

    def __init__(self, step: int, min_eigenvalue: float):
        self.step = step
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"state lost positivity at step {step}: min eigenvalue {min_eigenvalue:.3e}"
        )


class InternalConsistencyError(RuntimeError):
    """Trace and covariance routes disagree; the eigenframe is corrupted."""


class SingularOutcomeError(RuntimeError):
    """A POVM outcome has zero probability but a nonzero probability current."""


class UnattainableSaturationError(RuntimeError):
    """The requested drive needs a matrix element inside a degenerate block."""


class BoundViolationError(RuntimeError):
    """A mathematically guaranteed inequality failed numerically."""


class SupportWarning(UserWarning):
    """Dynamics moves probability into or out of unsupported eigenvalues."""
