"""Exception types shared across the package."""


class SimulationError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SimulationError, ValueError):
    """A parameter set, schedule, or configuration violates its contract.

    Raised before any simulation work starts; maps to CLI exit code 2.
    """


class CalibrationError(ValidationError):
    """Calibration inputs are inconsistent (e.g. implied rho < 0)."""


class DomainError(ValidationError):
    """A function argument is outside its mathematical domain."""
