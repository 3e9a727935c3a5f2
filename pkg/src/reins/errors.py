"""Exception hierarchy shared by the solver modules."""

from __future__ import annotations


class ReinsError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ReinsError):
    """Malformed configuration document (bad JSON, unknown or mistyped key)."""

    def __init__(self, message: str, key_path: str = ""):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}" if key_path else message)


class InvalidBundleError(ReinsError):
    """A solver was handed a bundle that fails validation."""

    def __init__(self, report):
        self.report = report
        super().__init__("invalid model bundle: " + "; ".join(report.violations))


class InvalidMeasureError(ReinsError):
    pass


class QuadratureError(ReinsError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, value: float, error_estimate: float):
        self.value = value
        self.error_estimate = error_estimate
        super().__init__(f"{message} (best={value!r}, err={error_estimate!r})")


class BlowUpError(ReinsError):
    """Backward ODE integration exceeded the magnitude threshold."""

    def __init__(self, time: float, threshold: float):
        self.time = time
        self.threshold = threshold
        super().__init__(
            f"solution magnitude exceeded {threshold:g} at t={time!r} "
            "(finite-time blow-up; see the existence bound)"
        )


class RootFindingError(ReinsError):
    pass


class DomainError(ReinsError):
    pass
