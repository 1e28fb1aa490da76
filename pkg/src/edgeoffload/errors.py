"""Exception types raised across the package."""


class EdgeOffloadError(Exception):
    pass


class ConfigError(EdgeOffloadError, ValueError):
    pass


class InvalidChannelError(EdgeOffloadError, ValueError):
    pass


class UnreachableServerError(EdgeOffloadError, ValueError):
    pass


class InvalidFrequencyError(EdgeOffloadError, ValueError):
    pass


class InvalidStateError(EdgeOffloadError, RuntimeError):
    pass


class ConstraintError(EdgeOffloadError, ValueError):
    """Action violates the simplex / box constraints."""


class DegenerateActionError(EdgeOffloadError, ValueError):
    pass


class DomainError(EdgeOffloadError, ValueError):
    pass


class LifecycleError(EdgeOffloadError, RuntimeError):
    pass


class ShapeError(EdgeOffloadError, ValueError):
    pass


class DivergenceError(EdgeOffloadError, FloatingPointError):
    """Non-finite loss or gradient during training."""

    def __init__(self, message, episode=None):
        super().__init__(message)
        self.episode = episode


class InsufficientDataError(EdgeOffloadError, ValueError):
    pass
