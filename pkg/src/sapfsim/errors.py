"""Exception hierarchy for the simulator."""

from __future__ import annotations


class SapfsimError(Exception):
    """Base class for every error raised by this package."""


class InvalidSampleError(SapfsimError, ValueError):
    """A signal sample carried a NaN or infinite component."""


class ConfigurationError(SapfsimError, ValueError):
    """A block or scenario was configured with values outside its valid range.

    ``key`` names the offending setting, e.g. ``"[sim].dt"``.
    """

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        if key is not None and key not in message:
            message = f"{key}: {message}"
        super().__init__(message)


class DomainError(SapfsimError, ValueError):
    pass


class CalibrationError(SapfsimError):
    pass


class DegenerateVoltageError(SapfsimError, ArithmeticError):
    pass


class SimulationBlowup(SapfsimError):
    """Raised when a state leaves its physical range mid-run."""

    def __init__(self, message: str, step: int | None = None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)


class InsufficientDataError(SapfsimError, ValueError):
    pass


class UndefinedMetricError(SapfsimError, ArithmeticError):
    """THD or power factor requested for a signal with zero reference."""
