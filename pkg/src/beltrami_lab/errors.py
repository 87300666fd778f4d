"""Exception and warning types shared across the package."""


class LabError(Exception):
    """Base class for all errors raised by the package."""


class InvalidArgument(LabError, ValueError):
    """An argument violates a documented precondition."""


class SamplingError(LabError, ValueError):
    """A sampled function produced a non-finite value."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class GridMismatch(LabError, ValueError):
    """Two fields live on different grids."""


class UnsupportedHomogeneity(LabError, ValueError):
    """A kernel index outside the supported homogeneity range."""


class InvalidDomain(LabError, ValueError):
    """Boundary data does not describe a simple closed curve."""


class EmptyCoverError(LabError, ValueError):
    """A Whitney covering would contain no cubes."""


class NoChainError(LabError, RuntimeError):
    """Two cubes are not connected in the neighbour graph."""


class UndefinedNormError(LabError, ValueError):
    """A discrete norm has no admissible cells to sum over."""


class NotContractiveError(LabError, ValueError):
    """The Beltrami coefficient has sup norm at least one."""


class AccuracyError(LabError, ValueError):
    """A quadrature would be evaluated outside its accuracy regime."""


class DegenerateProbeError(LabError, ValueError):
    """A fit cannot be performed because the reference side vanishes."""


class InsufficientData(LabError, ValueError):
    """Too few samples for a requested fit or table."""


class SupportWarning(UserWarning):
    """Field mass leaks outside the central quarter of the grid."""


class ConvergenceWarning(UserWarning):
    """An iteration stopped at its cap before reaching the tolerance."""
