"""Exception types shared across the package."""


class RabiChirpError(Exception):
    """Base class for all package errors."""


class DomainError(RabiChirpError, ValueError):
    """Evaluation requested outside a function's or map's domain."""


class ValidationError(RabiChirpError, ValueError):
    """An input object violates one of its declared invariants."""


class LevelCrossingError(RabiChirpError):
    """The level splitting is not strictly positive somewhere in the window."""


class DegenerateCouplingError(RabiChirpError):
    """The transition dipole vanishes where the equations divide by it."""


class OrientationError(RabiChirpError):
    """The time-warp integrand is negative; absorb the sign of the transition
    dipole into its phase convention so the warp runs forward."""


class AmbiguousTauError(RabiChirpError):
    """A warped-time query falls in a flat segment (vanishing envelope),
    where the inverse map is not unique."""


class IntegrationError(RabiChirpError):
    """Adaptive integration failed (step-size underflow or step budget)."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class DesignFailureError(RabiChirpError):
    """The chirp iteration produced a non-physical (non-positive) frequency."""


class ConfigError(RabiChirpError, ValueError):
    """A run configuration failed to parse or validate."""

    def __init__(self, message, key=None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key
