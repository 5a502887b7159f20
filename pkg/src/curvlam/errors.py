"""Exception types shared across the package."""


class CurvlamError(Exception):
    """Base class for all package-specific errors."""


class DomainError(CurvlamError, ValueError):
    """A point or state lies outside the valid chart / quadric domain."""


class SingularityError(CurvlamError, ValueError):
    """Evaluation at (or propagation into) a force singularity."""


class UnreachableEnergyError(CurvlamError, ValueError):
    """Requested energy leaves no kinetic energy at the departure point."""


class ConvergenceError(CurvlamError, RuntimeError):
    """An iterative procedure (integrator step control, Newton) failed."""
