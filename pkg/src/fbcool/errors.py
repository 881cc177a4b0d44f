"""Exception hierarchy shared by the analysis and simulation layers."""


class FbcoolError(Exception):
    """Base class for all package errors."""


class ValidationError(FbcoolError, ValueError):
    """A parameter or configuration failed validation."""


class PoleOnAxisError(FbcoolError, ArithmeticError):
    """The loop was evaluated exactly on one of its poles."""


class UnstableLoopError(FbcoolError):
    """The closed loop 1 + H(s) has zeros outside the open left half-plane."""

    def __init__(self, message, poles=()):
        super().__init__(message)
        self.poles = tuple(poles)


class ImproperLoopError(FbcoolError):
    """An improper loop gain was given where a realizable system is required."""


class NumericalError(FbcoolError, ArithmeticError):
    """Quadrature or root finding failed to reach the requested tolerance."""


class SimulationInstabilityError(FbcoolError):
    """The time-domain loop signal diverged during a run."""

    def __init__(self, message, step=None, trajectory=None):
        super().__init__(message)
        self.step = step
        self.trajectory = trajectory


class NonStationaryError(FbcoolError):
    """A sampled velocity series still trends after burn-in."""
