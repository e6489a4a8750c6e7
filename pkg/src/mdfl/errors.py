"""Exception types raised by the library."""


class ConfigurationError(ValueError):
    """Invalid scenario, network or estimator configuration."""


class InvalidSurfaceError(ConfigurationError):
    """A reflecting surface with coincident endpoints."""


class ConsistencyError(RuntimeError):
    """Internal geometric invariant violated (e.g. non-equidistant node pairs)."""


class OutOfWindowError(ValueError):
    """A delay falls outside the observation window."""


class EmptyNetworkError(ValueError):
    """No multipath components are available to measure."""


class SingularGradientError(ValueError):
    """Gradient requested at a (virtual) node position."""


class UndefinedExpectationError(ValueError):
    """Every point of an averaging region has a singular bound."""
