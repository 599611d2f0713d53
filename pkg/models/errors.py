"""
Exception types shared by the services, the CLI and the HTTP routes.

Every error carries a RunStatus so callers can map it to an exit code or an
HTTP status without inspecting the concrete class.
"""

from enum import Enum
from typing import Optional


class RunStatus(Enum):
    """Outcome of a run; values double as CLI exit codes."""
    SUCCESS = 0
    VALIDATION_ERROR = 1
    SOLVER_FAILURE = 2


class RobustFairError(Exception):
    """Base class for every error raised by this package."""

    status: RunStatus = RunStatus.VALIDATION_ERROR


class ConfigError(RobustFairError):
    """Malformed or invalid experiment configuration."""


class InvalidInputError(RobustFairError):
    """Non-finite, mis-shaped or out-of-domain numeric input."""


class DatasetError(RobustFairError):
    """Dataset could not be generated, parsed or split."""


class UndefinedMetricError(RobustFairError):
    """A fairness gap conditions on an empty group (strict mode only)."""


class PoleError(RobustFairError):
    """Shift equals an eigenvalue, so the shifted system is singular."""

    status = RunStatus.SOLVER_FAILURE


class BracketError(RobustFairError):
    """Bisection bracket does not enclose a sign change."""

    status = RunStatus.SOLVER_FAILURE


class SolverFailureError(RobustFairError):
    """
    An inner solver failed on a specific sample.

    Attributes:
        reason: Failure description without the sample prefix
        sample_index: Index of the offending training sample, if known
    """

    status = RunStatus.SOLVER_FAILURE

    def __init__(self, message: str, sample_index: Optional[int] = None) -> None:
        super().__init__(message if sample_index is None else f"sample {sample_index}: {message}")
        self.reason: str = message
        self.sample_index: Optional[int] = sample_index

    def at_offset(self, offset: int) -> "SolverFailureError":
        """Same failure with the sample index shifted into a larger index range."""
        return SolverFailureError(self.reason, sample_index=offset + (self.sample_index or 0))


class DivergenceError(RobustFairError):
    """
    Training produced a non-finite loss.

    Attributes:
        epoch: Zero-based epoch index at which the loss blew up
    """

    status = RunStatus.SOLVER_FAILURE

    def __init__(self, epoch: int, message: str = "non-finite training loss") -> None:
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch: int = epoch
