"""Exception hierarchy.

Every exception carries an ``exit_code`` used by the command line front end:
2 for invalid configuration, 3 for numerical divergence and 4 for bracketing
or convergence failures.
"""

from __future__ import annotations

__all__ = [
    "ModelError",
    "ConfigurationError",
    "DomainError",
    "DivergenceError",
    "BracketError",
    "ConvergenceError",
    "SingularKernelError",
    "DegenerateResonanceError",
    "SimplicityError",
    "InsufficientDataError",
    "NotSteadyError",
]


class ModelError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigurationError(ModelError, ValueError):
    """Invalid parameters, grid or time step."""

    exit_code = 2


class DomainError(ConfigurationError):
    """Argument outside the domain of a kinetic function."""


class DivergenceError(ModelError, ArithmeticError):
    """Non-finite values or unbounded growth during time integration."""

    exit_code = 3


class BracketError(ModelError, ValueError):
    """No sign change inside the requested interval."""

    exit_code = 4


class ConvergenceError(ModelError, RuntimeError):
    """An iteration did not reach its tolerance."""

    exit_code = 4

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SingularKernelError(ModelError, ArithmeticError):
    """The Green's function does not exist for the requested shift."""

    exit_code = 4


class DegenerateResonanceError(ModelError, ArithmeticError):
    """A resolvent needed by the normal form is (nearly) singular."""

    exit_code = 4


class SimplicityError(ModelError, ArithmeticError):
    """The critical eigenvalue is not simple (vanishing derivative)."""

    exit_code = 4


class InsufficientDataError(ModelError, ValueError):
    """Too few samples to classify a trajectory."""

    exit_code = 2


class NotSteadyError(ModelError, ValueError):
    """A steady-state quantity was requested from an oscillating run."""

    exit_code = 2
