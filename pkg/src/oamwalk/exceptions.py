"""Simulation exception hierarchy."""
from typing import List, Optional


class OamWalkError(Exception):
    """Base exception for simulation failures."""

    def __init__(self, message: str, log_details: Optional[str] = None):
        """Initialize simulation error.

        Args:
            message: User-facing error message
            log_details: Internal details for logging (numbers, shapes, bounds)
        """
        self.message = message
        self.log_details = log_details
        super().__init__(message)


class InvalidParameterError(OamWalkError, ValueError):
    """A physical or numerical parameter is outside its allowed range."""
    pass


class NonUnitaryError(InvalidParameterError):
    """A user-supplied coin matrix is not unitary."""
    pass


class InvalidStateError(OamWalkError, ValueError):
    """Walker state is malformed or not normalized."""
    pass


class LatticeOverflowError(OamWalkError):
    """Nonzero amplitude would leave the truncated OAM lattice."""
    pass


class DegenerateGatingError(OamWalkError):
    """Central overlap coefficient is zero so the step cannot be recovered."""
    pass


class SamplingError(OamWalkError):
    """Element phase gradient exceeds the grid Nyquist limit."""
    pass


class GridExtentError(OamWalkError):
    """Beam or detection bins do not fit inside the sampled grid."""
    pass


class EmptySpectrumError(OamWalkError, ValueError):
    """Spectrum has zero total weight where a normalizable one is required."""
    pass


class ConfigValidationError(OamWalkError):
    """Scenario configuration failed validation.

    Attributes:
        errors: Field-level messages of the form "<dotted.field>: <reason>"
    """

    def __init__(self, message: str, errors: Optional[List[str]] = None,
                 log_details: Optional[str] = None):
        self.errors = list(errors or [])
        super().__init__(message, log_details=log_details)
