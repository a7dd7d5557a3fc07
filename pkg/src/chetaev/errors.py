"""Exception types raised across the package."""


class ChetaevError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolation(ChetaevError, ValueError):
    """An argument violates an operation's precondition (shape, finiteness, ...)."""


class OffConstraint(ContractViolation):
    """A point that must lie on the constraint set does not."""


class SurfaceDegenerate(ChetaevError):
    """The constraint jacobian loses rank, or the chosen split block is singular."""


class LagrangianInadmissible(ChetaevError):
    """The block G m^-1 G^T is (numerically) singular at the point."""


class FrameSingular(ChetaevError):
    """The assembled frame matrix cannot be inverted."""


class ConstraintsNotSecondClass(ChetaevError):
    """The matrix of constraint brackets is singular."""


class DegenerateBody(ChetaevError):
    """Principal moments violate the strict triangle inequality."""


class StepRejected(ChetaevError):
    """A Taylor step lies outside the estimated convergence region."""

    def __init__(self, message, suggested_step=None):
        super().__init__(message)
        self.suggested_step = suggested_step
