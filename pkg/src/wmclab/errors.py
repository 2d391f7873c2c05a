"""Exception types shared across the package."""


class WmcError(Exception):
    """Base class for all errors raised by this package."""


class ZeroVector(WmcError):
    """A direction vector was zero where a nonzero vector is required."""


class InvalidParam(WmcError):
    """A constructor parameter is outside its admissible range."""


class ValidationFailed(WmcError):
    """A constructed object failed its sampled admissibility checks."""


class WeightUndefined(WmcError):
    """A weight matrix could not be evaluated at the requested direction."""


class SingularMetric(WmcError):
    """The first fundamental form is singular or not positive definite."""


class GridTooSmall(WmcError):
    """A chart grid has too few points for the requested stencil."""


class OutsideCollar(WmcError):
    """A point lies outside the boundary collar where distance calculus is valid."""


class ResolutionTooCoarse(WmcError):
    """The grid cannot resolve the domain (no interior, isolated or disconnected
    interior nodes, or an under-resolved boundary collar)."""


class NewtonStall(WmcError):
    """Damped Newton hit its damping floor or iteration limit before the
    residual tolerance."""

    def __init__(self, message, iterations=None, residuals=None):
        super().__init__(message)
        self.iterations = iterations
        self.residuals = residuals if residuals is not None else []


class LinearSolveFailure(WmcError):
    """The sparse linear solve inside Newton failed (singular Jacobian)."""


class NotConverged(WmcError):
    """An operation requiring a converged solve was given a failed report."""


class UnknownSurface(WmcError):
    """The named built-in surface does not exist."""


class ConfigError(WmcError):
    """A run configuration file is malformed or inconsistent."""

    def __init__(self, message, section=None, key=None):
        loc = ""
        if section is not None:
            loc = f" [{section}]" + (f" {key}" if key else "")
        super().__init__(message + loc)
        self.section = section
        self.key = key
