"""
Models package initialization.
"""

from models.errors import (
    RunStatus,
    RobustFairError,
    ConfigError,
    InvalidInputError,
    DatasetError,
    UndefinedMetricError,
    PoleError,
    BracketError,
    SolverFailureError,
    DivergenceError
)
from models.schemas import (
    SolverKind,
    StepRule,
    TrainConfig,
    Unfair2dParams,
    DatasetSchema,
    SweepConfig
)

__all__ = [
    "RunStatus",
    "RobustFairError",
    "ConfigError",
    "InvalidInputError",
    "DatasetError",
    "UndefinedMetricError",
    "PoleError",
    "BracketError",
    "SolverFailureError",
    "DivergenceError",
    "SolverKind",
    "StepRule",
    "TrainConfig",
    "Unfair2dParams",
    "DatasetSchema",
    "SweepConfig"
]
