"""
Configuration module for the robust-fairness toolkit.

This module provides centralized numeric defaults for the solvers, the
trainer, the synthetic generator and the sweep runner.
All imports are from local env.py (same folder).
"""

import os
from typing import ClassVar

# Import from local env.py (same folder)
from env import (
    ConstantsVar,
    debug_info,
    debug_error,
    debug_warning,
    debug_success,
    debug_critical,
    IS_DEBUG_MODE,
)

__version__: str = "1.0.0"


class SolverConfig:
    """
    Tolerances and defaults of the inner-maximization solvers.

    Radius-dependent defaults are stored as coefficients and scaled by
    max(1, r) (or r) at the call site.
    """

    # Symmetry / finiteness checks
    SYMMETRY_ATOL: ClassVar[float] = 1e-12
    POLE_ATOL: ClassVar[float] = 1e-14

    # Jacobi eigensolver
    JACOBI_REL_TOL: ClassVar[float] = 1e-12
    JACOBI_MAX_SWEEPS: ClassVar[int] = 100

    # Trust region subproblem
    ZERO_GRAD_TOL: ClassVar[float] = 1e-12
    CONCAVE_EIG_TOL: ClassVar[float] = 1e-12
    POLE_GUARD_COEFF: ClassVar[float] = 1e-9
    TRS_TOL_COEFF: ClassVar[float] = 1e-8
    TRS_MAX_ITER: ClassVar[int] = 200
    BISECT_WIDTH_COEFF: ClassVar[float] = 1e-12
    BRACKET_MARGIN_COEFF: ClassVar[float] = 1e-12  # relative slack on the upper bracket end

    # Projected gradient ascent
    PGD_ALPHA_FRACTION: ClassVar[float] = 0.25  # alpha = r / 4
    PGD_MAX_ITER: ClassVar[int] = 50
    PGD_STOP_COEFF: ClassVar[float] = 1e-10


class TrainDefaults:
    """Outer-loop defaults (10 epochs at learning rate 0.01)."""

    LEARNING_RATE: ClassVar[float] = 0.01
    EPOCHS: ClassVar[int] = 10
    THRESHOLD: ClassVar[float] = 0.5


class SyntheticDefaults:
    """Defaults of the two-score hiring generator."""

    TRAIN_SIZE: ClassVar[int] = 2000
    TEST_SIZE: ClassVar[int] = 2000
    SHIFT: ClassVar[float] = 0.1
    BOUNDARY: ClassVar[tuple[float, float, float]] = (1.0, 1.0, 1.2)
    GROUP_PROB: ClassVar[float] = 0.5


class SweepDefaults:
    """Radius sweep and output layout."""

    RADII: ClassVar[list[float]] = [round(0.10 + 0.01 * i, 2) for i in range(11)]
    COMPARE_RADIUS: ClassVar[float] = 0.18
    OUTPUT_DIR: ClassVar[str] = "results"
    TIMING_DIGITS: ClassVar[int] = 4
    NA_LITERAL: ClassVar[str] = "NA"


class APIConfig:
    """
    HTTP surface settings.

    Contains authentication, CORS and metadata for the audit API.
    """

    API_KEY: ClassVar[str] = ConstantsVar.API_KEY
    IS_DEBUG_MODE: ClassVar[bool] = IS_DEBUG_MODE
    VERSION: ClassVar[str] = __version__

    ALLOWED_ORIGINS: ClassVar[list[str]] = [
        "http://localhost:3000",
        "http://localhost:8000",
    ]

    # Shipped dataset schema fixtures
    SCHEMA_DIR: ClassVar[str] = os.path.join(
        os.path.dirname(os.path.abspath(__file__)),
        "schemas"
    )


# Re-export from env for convenience
__all__ = [
    "ConstantsVar",
    "SolverConfig",
    "TrainDefaults",
    "SyntheticDefaults",
    "SweepDefaults",
    "APIConfig",
    "debug_info",
    "debug_error",
    "debug_warning",
    "debug_success",
    "debug_critical",
    "IS_DEBUG_MODE",
]
