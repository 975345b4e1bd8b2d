from typing import Any


class RisnetError(Exception):
    """Base class for all risnet errors"""


class DomainError(RisnetError, ValueError):
    """An argument lies outside the domain of an operation"""


class NumericalError(RisnetError, RuntimeError):
    """A numerical procedure did not reach its tolerance.

    Args:
        message: Human readable diagnostic
        partial: Best estimate available when the procedure stopped
        error_estimate: Estimated absolute error of ``partial``
    """

    def __init__(
        self, message: str, partial: Any = None, error_estimate: float | None = None
    ):
        super().__init__(message)
        self.partial = partial
        self.error_estimate = error_estimate


class InfeasibleError(RisnetError):
    """Transform arguments fall outside the strip of convergence"""

    def __init__(self, message: str, margin: float):
        super().__init__(f"{message} (convergence margin {margin:.6g})")
        self.margin = margin


class ConfigError(RisnetError):
    """Invalid experiment or channel configuration"""

    def __init__(self, message: str, fields: list[str] | None = None):
        super().__init__(message)
        self.fields = fields or []


class NumericalWarning(UserWarning):
    """Result is usable but its accuracy is degraded"""
