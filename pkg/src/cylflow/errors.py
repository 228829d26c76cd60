"""Exception hierarchy shared by all modules."""


class CylflowError(Exception):
    """Base class for every error raised by the package."""


class DomainError(CylflowError, ValueError):
    """A parameter lies outside the domain where an operation is defined."""


class ShapeError(CylflowError, ValueError):
    """Two fields (or a field and a grid) have incompatible truncations."""


class GraphConditionError(DomainError):
    """The radius profile ``v`` is not strictly positive at some grid node."""


class PreconditionError(CylflowError, ValueError):
    """An input violates a documented precondition of an operation."""


class AdmissibilityError(CylflowError, RuntimeError):
    """A symmetry path left its admissible neighbourhood.

    ``tau`` holds the first offending time.
    """

    def __init__(self, message, tau=None):
        super().__init__(message)
        self.tau = tau


class DivergenceError(CylflowError, RuntimeError):
    """The fixed-point iteration failed to contract."""


class SamplingError(CylflowError, RuntimeError):
    """Rejection sampling ran out of budget."""


class ResourceError(CylflowError, MemoryError):
    """A requested dense computation is too large."""


class ConfigError(CylflowError, ValueError):
    """Invalid run configuration; ``field`` names the offending parameter."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
