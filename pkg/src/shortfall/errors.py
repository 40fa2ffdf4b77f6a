"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter violates its constraint; the message names the field."""


class NoDensityError(ValueError):
    """Raised when a density is requested at an atom of the distribution."""


class InfiniteShortfallError(ValueError):
    """Raised when the expected shortfall diverges (non-integrable tail)."""


class QuadratureError(RuntimeError):
    """Numerical integration failed to reach the requested tolerance."""
