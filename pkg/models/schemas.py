"""
Pydantic models for the robust-fairness toolkit.

This module defines the experiment configuration documents (training,
synthetic data, dataset schemas, sweeps) and the request/response schemas
of the HTTP audit API.
"""

from enum import Enum
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config import SweepDefaults, SyntheticDefaults, TrainDefaults, SolverConfig, __version__


class SolverKind(str, Enum):
    """Inner-maximization strategy."""
    TRS = "TRS"
    PGD = "PGD"
    RANDOM = "RANDOM"
    NONE = "NONE"


class StepRule(str, Enum):
    """PGD step: alpha * g / ||g|| (NORMALIZED) or alpha * g (RAW)."""
    NORMALIZED = "NORMALIZED"
    RAW = "RAW"


class StrictModel(BaseModel):
    """Base for configuration documents: unknown keys are rejected."""
    model_config = ConfigDict(extra="forbid")


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

class PgdSettings(StrictModel):
    """
    Projected gradient ascent settings.

    Attributes:
        alpha: Step size, None means r / 4
        max_iter: Update budget per sample
        stop_tol: Movement threshold, None means 1e-10 max(1, r)
        step_rule: Normalized or raw gradient steps
    """
    alpha: Optional[float] = Field(default=None, gt=0.0)
    max_iter: int = Field(default=SolverConfig.PGD_MAX_ITER, ge=1)
    stop_tol: Optional[float] = Field(default=None, gt=0.0)
    step_rule: StepRule = StepRule.NORMALIZED


class TrsSettings(StrictModel):
    """
    Trust region subproblem settings.

    Attributes:
        tol: Accepted | ||delta|| - r |, None means 1e-8 max(1, r)
        max_iter: Bisection budget per sample
    """
    tol: Optional[float] = Field(default=None, gt=0.0)
    max_iter: int = Field(default=SolverConfig.TRS_MAX_ITER, ge=1)


class TrainConfig(StrictModel):
    """
    Outer training loop configuration.

    Attributes:
        radius: Perturbation radius, 0 trains the nonrobust model
        solver: Inner-maximization strategy
        learning_rate: Gradient descent step
        epochs: Number of passes over the training set
        l2_coeff: Weight decay on w (the bias is not penalized)
        seed: Seed of the random strategy
        pgd: PGD settings
        trs: TRS settings
        threads: Worker count for inner solves
        batch_size: Samples per parameter update, None means full batch
    """
    radius: float = Field(default=0.0, ge=0.0)
    solver: SolverKind = SolverKind.NONE
    learning_rate: float = Field(default=TrainDefaults.LEARNING_RATE, gt=0.0)
    epochs: int = Field(default=TrainDefaults.EPOCHS, ge=1)
    l2_coeff: float = Field(default=0.0, ge=0.0)
    seed: int = 0
    pgd: PgdSettings = Field(default_factory=PgdSettings)
    trs: TrsSettings = Field(default_factory=TrsSettings)
    threads: int = Field(default=1, ge=1)
    batch_size: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def check_solver_radius(self) -> "TrainConfig":
        if self.solver is SolverKind.NONE and self.radius > 0:
            raise ValueError("solver NONE requires radius 0")
        return self


# ---------------------------------------------------------------------------
# Data
# ---------------------------------------------------------------------------

class Unfair2dParams(StrictModel):
    """
    Two-score hiring data with a group-dependent score shift.

    Attributes:
        m: Number of samples
        seed: Generator seed
        shift: Score advantage of group B (and disadvantage of group A)
        boundary: (a1, a2, c) of the label rule a1 x1 + a2 x2 > c
        group_prob: Probability that a sample belongs to group B
    """
    m: int = Field(default=SyntheticDefaults.TRAIN_SIZE, ge=1)
    seed: int = 0
    shift: float = Field(default=SyntheticDefaults.SHIFT, ge=0.0, lt=0.5)
    boundary: tuple[float, float, float] = SyntheticDefaults.BOUNDARY
    group_prob: float = Field(default=SyntheticDefaults.GROUP_PROB, ge=0.0, le=1.0)

    @field_validator("boundary")
    @classmethod
    def check_boundary(cls, value: tuple[float, float, float]) -> tuple[float, float, float]:
        if value[0] == 0.0 and value[1] == 0.0:
            raise ValueError("boundary coefficients (a1, a2) must not both be zero")
        return value


class DatasetSchema(StrictModel):
    """
    Column mapping of a tabular CSV file.

    Attributes:
        features: Numeric feature columns, in order
        label: Label column
        label_positive: Literals mapped to y = 1
        label_invert: Flip the label rule after matching
        sensitive: Sensitive attribute column
        sensitive_group1: Literals mapped to s = 1
        header: Whether the first row names the columns
        column_names: Column names for header-less files
        delimiter: Field separator
        na_values: Extra literals treated as missing
        strict: Fail on an unparseable feature cell instead of dropping the row
    """
    features: list[str] = Field(..., min_length=1)
    label: str
    label_positive: list[str] = Field(..., min_length=1)
    label_invert: bool = False
    sensitive: str
    sensitive_group1: list[str] = Field(..., min_length=1)
    header: bool = True
    column_names: Optional[list[str]] = None
    delimiter: str = Field(default=",", min_length=1)
    na_values: list[str] = Field(default_factory=lambda: ["?"])
    strict: bool = False

    @model_validator(mode="after")
    def check_column_names(self) -> "DatasetSchema":
        if not self.header and not self.column_names:
            raise ValueError("column_names is required when header is false")
        return self


class SyntheticSource(StrictModel):
    """Synthetic train set from `params`; the test set reuses them with `test_size` and seed + 1."""
    kind: Literal["synthetic"] = "synthetic"
    params: Unfair2dParams = Field(default_factory=Unfair2dParams)
    test_size: int = Field(default=SyntheticDefaults.TEST_SIZE, ge=1)


class CsvSource(StrictModel):
    """CSV file split into train and test by a seeded shuffle."""
    kind: Literal["csv"] = "csv"
    path: str
    schema_file: Optional[str] = None
    columns: Optional[DatasetSchema] = None
    test_fraction: float = Field(default=0.3, gt=0.0, lt=1.0)
    split_seed: int = 0

    @model_validator(mode="after")
    def check_schema_source(self) -> "CsvSource":
        if (self.schema_file is None) == (self.columns is None):
            raise ValueError("exactly one of schema_file and columns is required")
        return self


DatasetSource = Annotated[Union[SyntheticSource, CsvSource], Field(discriminator="kind")]


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------

class EmitFlags(StrictModel):
    """Which result files a sweep writes (summary.json is always written)."""
    fairness: bool = True
    accuracy: bool = True
    timing: bool = True
    comparison: bool = True


class SweepConfig(StrictModel):
    """
    Radius sweep over inner-maximization strategies.

    The nonrobust baseline (solver NONE, radius 0) is always trained; NONE in
    `solvers` is accepted and folded into it.

    Attributes:
        dataset: Synthetic or CSV source ("synthetic" is shorthand for defaults)
        radii: Strictly increasing, nonnegative radii
        solvers: Strategies to sweep
        train: Base training configuration; radius and solver are set per cell
        output_dir: Result directory, None means the environment default
        emit: Result files to write
        compare_radius: Radius of the side-by-side table, None picks 0.18 or the largest radius
        cell_workers: Cells trained in parallel when timing is off
    """
    dataset: DatasetSource = Field(default_factory=SyntheticSource)
    radii: list[float] = Field(default_factory=lambda: list(SweepDefaults.RADII))
    solvers: list[SolverKind] = Field(
        default_factory=lambda: [SolverKind.TRS, SolverKind.PGD, SolverKind.RANDOM]
    )
    train: TrainConfig = Field(default_factory=TrainConfig)
    output_dir: Optional[str] = None
    emit: EmitFlags = Field(default_factory=EmitFlags)
    compare_radius: Optional[float] = Field(default=None, ge=0.0)
    cell_workers: int = Field(default=1, ge=1)

    @field_validator("dataset", mode="before")
    @classmethod
    def expand_shorthand(cls, value: object) -> object:
        if value == "synthetic":
            return {"kind": "synthetic"}
        return value

    @field_validator("radii")
    @classmethod
    def check_radii(cls, value: list[float]) -> list[float]:
        if any(r < 0 for r in value):
            raise ValueError("radii must be nonnegative")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("radii must be strictly increasing")
        return value

    @property
    def robust_solvers(self) -> list[SolverKind]:
        """Swept strategies without the baseline, duplicates removed."""
        return list(dict.fromkeys(s for s in self.solvers if s is not SolverKind.NONE))

    @property
    def resolved_compare_radius(self) -> Optional[float]:
        if self.compare_radius is not None:
            return self.compare_radius
        if not self.radii:
            return None
        if SweepDefaults.COMPARE_RADIUS in self.radii:
            return SweepDefaults.COMPARE_RADIUS
        return self.radii[-1]


# ---------------------------------------------------------------------------
# HTTP API
# ---------------------------------------------------------------------------

class HealthResponse(BaseModel):
    """
    Response model for health check endpoint.

    Attributes:
        status: Health status
        version: API version
    """
    status: str = "healthy"
    version: str = __version__


class AuditRequest(BaseModel):
    """
    Request model for the fairness audit endpoint.

    Attributes:
        preds: Binary predictions
        labels: Binary ground truth
        sensitive: Binary sensitive attribute
        strict: Reject gaps that condition on an empty group
    """
    preds: list[Annotated[int, Field(ge=0, le=1)]] = Field(..., min_length=1)
    labels: list[Annotated[int, Field(ge=0, le=1)]] = Field(..., min_length=1)
    sensitive: list[Annotated[int, Field(ge=0, le=1)]] = Field(..., min_length=1)
    strict: bool = False

    @model_validator(mode="after")
    def check_lengths(self) -> "AuditRequest":
        if not (len(self.preds) == len(self.labels) == len(self.sensitive)):
            raise ValueError("preds, labels and sensitive must have equal length")
        return self


class AuditResponse(BaseModel):
    """Fairness gaps (None where undefined) and the eight group counts."""
    independence: Optional[float] = None
    separation_y0: Optional[float] = None
    separation_y1: Optional[float] = None
    sufficiency_yhat0: Optional[float] = None
    sufficiency_yhat1: Optional[float] = None
    counts: dict[str, int]
    total: int


class InnerSolveRequest(BaseModel):
    """
    Request model for the inner-solve endpoint.

    Attributes:
        w: Model weights
        b: Model bias
        x: Input sample
        y: Label
        radius: Perturbation radius
        solver: TRS, PGD or RANDOM
        seed: Seed of the random strategy
    """
    w: list[float] = Field(..., min_length=1)
    b: float = 0.0
    x: list[float] = Field(..., min_length=1)
    y: int = Field(..., ge=0, le=1)
    radius: float = Field(..., gt=0.0)
    solver: SolverKind = SolverKind.TRS
    seed: int = 0

    @model_validator(mode="after")
    def check_request(self) -> "InnerSolveRequest":
        if len(self.w) != len(self.x):
            raise ValueError("w and x must have equal length")
        if self.solver is SolverKind.NONE:
            raise ValueError("solver must be TRS, PGD or RANDOM")
        return self


class KktResponse(BaseModel):
    stationarity: float
    primal: float
    dual: float
    complementarity: float


class InnerSolveResponse(BaseModel):
    """Perturbation, perturbed point, closed-form reference and KKT residuals."""
    solver: SolverKind
    delta: list[float]
    perturbed: list[float]
    lam: float
    delta_norm: float
    boundary_active: bool
    iterations: int
    loss: float
    perturbed_loss: float
    exact_delta: list[float]
    exact_lam: float
    kkt: KktResponse
