"""
Custom exceptions for the isingnoise package.
"""

from typing import Dict, Optional, Union

DetailValue = Union[str, int, float]


class SimulationError(Exception):
    """Base exception for all simulation-related errors."""

    def __init__(
        self,
        component: str,
        message: str,
        error_code: Optional[int] = None,
        details: Optional[Dict[str, DetailValue]] = None,
    ):
        self.component = component
        self.message = message
        self.error_code = error_code
        self.details = details or {}

        error_msg = f"[{component}] {message}"
        if error_code is not None:
            error_msg += f" (Error code: {error_code})"

        if details:
            error_msg += "\nDetails:"
            for key, value in details.items():
                error_msg += f"\n  {key}: {value}"

        super().__init__(error_msg)


class ParameterError(SimulationError, ValueError):
    """Raised when an operation receives inputs outside its contract."""

    def __init__(
        self,
        component: str,
        message: str = "Invalid parameter",
        error_code: Optional[int] = None,
        details: Optional[Dict[str, DetailValue]] = None,
    ):
        super().__init__(component, message, error_code, details)


class ConfigError(SimulationError):
    """Raised when a run configuration cannot be parsed or validated."""

    def __init__(
        self,
        message: str = "Invalid configuration",
        line: Optional[int] = None,
        details: Optional[Dict[str, DetailValue]] = None,
    ):
        merged: Dict[str, DetailValue] = dict(details or {})
        if line is not None:
            merged["line"] = line
        self.line = line
        super().__init__("config", message, None, merged)


class NumericalError(SimulationError):
    """Raised when an integration or spectral diagnostic exceeds its tolerance."""

    def __init__(
        self,
        component: str,
        message: str = "Numerical failure",
        error_code: Optional[int] = None,
        details: Optional[Dict[str, DetailValue]] = None,
    ):
        super().__init__(component, message, error_code, details)
