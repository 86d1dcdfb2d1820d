"""Exception types raised across the package."""


class GGPError(Exception):
    """Base class for all package errors."""


class DegenerateInputError(GGPError, ValueError):
    """Input has too few points or otherwise cannot define a problem."""


class PointCloudParseError(GGPError, ValueError):
    """A point-cloud file row could not be parsed."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class ConnectivityError(GGPError):
    """The neighborhood graph is disconnected; increase the connectivity radius."""


class NumericalError(GGPError, ArithmeticError):
    """A factorization failed even after jitter escalation."""


class ExhaustionError(GGPError):
    """No admissible candidate remains for selection."""


class EstimationError(GGPError):
    """Every candidate hyperparameter failed numerically."""
