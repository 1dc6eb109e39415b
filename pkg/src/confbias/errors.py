"""Exception types shared across the package."""


class ConfbiasError(Exception):
    """Base class for all domain errors raised by this package."""


class ConfigurationError(ConfbiasError, ValueError):
    pass


class ShapeError(ConfbiasError, ValueError):
    pass


class DomainError(ConfbiasError, ValueError):
    pass


class InsufficientDataError(ConfbiasError, ValueError):
    pass


class DegenerateGeometryError(ConfbiasError, ValueError):
    pass


class PersistenceError(ConfbiasError):
    pass


class TrainingError(ConfbiasError, RuntimeError):
    """Raised when optimization produces non-finite or runaway values."""

    def __init__(self, message, step=None):
        self.step = step
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)


class SamplingError(ConfbiasError, RuntimeError):
    """Raised when a sampling chain leaves the finite reals."""

    def __init__(self, message, level=None, iteration=None):
        self.level = level
        self.iteration = iteration
        if level is not None:
            message = f"{message} (level t={level}, step i={iteration})"
        super().__init__(message)
