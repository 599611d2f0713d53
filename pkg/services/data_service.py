"""
Data Service - Synthetic generation and tabular CSV ingestion.

This module provides the two-score "unfair hiring" generator, the CSV loader
driven by a DatasetSchema, min-max normalization and the seeded
train/test split. Every dataset it returns has features in [0, 1] and binary
labels and sensitive attributes.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from config import debug_info, debug_warning
from models.errors import ConfigError, DatasetError, InvalidInputError
from models.schemas import DatasetSchema, Unfair2dParams


@dataclass(frozen=True)
class TabularDataset:
    """
    Feature matrix with binary labels and sensitive attribute.

    Attributes:
        X: (m, n_in) features, every entry in [0, 1]
        y: (m,) labels in {0, 1}
        s: (m,) sensitive attribute in {0, 1}
        feature_names: One name per column of X
        dropped_rows: Rows discarded while loading (CSV sources only)
    """
    X: np.ndarray
    y: np.ndarray
    s: np.ndarray
    feature_names: tuple[str, ...]
    dropped_rows: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        X: np.ndarray = np.asarray(self.X, dtype=float)
        y: np.ndarray = np.asarray(self.y).astype(int)
        s: np.ndarray = np.asarray(self.s).astype(int)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DatasetError(f"feature matrix must be (m, n) with m, n >= 1, got shape {X.shape}")
        if y.shape != (X.shape[0],) or s.shape != (X.shape[0],):
            raise DatasetError(f"length mismatch: X {X.shape[0]}, y {y.shape}, s {s.shape}")
        if len(self.feature_names) != X.shape[1]:
            raise DatasetError("one feature name per column is required")
        if not np.all(np.isfinite(X)) or X.min() < 0.0 or X.max() > 1.0:
            raise DatasetError("features must be finite and lie in [0, 1]")
        if not (np.all(np.isin(y, (0, 1))) and np.all(np.isin(s, (0, 1)))):
            raise DatasetError("labels and sensitive attribute must be binary")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def m(self) -> int:
        return self.X.shape[0]

    @property
    def n_in(self) -> int:
        return self.X.shape[1]

    def subset(self, indices: Sequence[int]) -> "TabularDataset":
        idx: np.ndarray = np.asarray(indices, dtype=int)
        return TabularDataset(self.X[idx], self.y[idx], self.s[idx], self.feature_names)


# ---------------------------------------------------------------------------
# Synthetic data
# ---------------------------------------------------------------------------

def generate_unfair2d_frame(p: Unfair2dParams) -> pd.DataFrame:
    """
    Sample the two-score data with both pre-shift and post-shift coordinates.

    Labels follow a1 x1 + a2 x2 > c at the original point. Group B (s = 1)
    then gains `shift` on both scores and group A loses it, clamped to [0, 1].

    Args:
        p: Generator parameters

    Returns:
        pd.DataFrame with columns x1_raw, x2_raw, x1, x2, s, y
    """
    rng: np.random.Generator = np.random.default_rng(p.seed)
    raw: np.ndarray = rng.uniform(0.0, 1.0, size=(p.m, 2))
    group_b: np.ndarray = rng.random(p.m) < p.group_prob

    a1, a2, c = p.boundary
    y: np.ndarray = (a1 * raw[:, 0] + a2 * raw[:, 1] > c).astype(int)
    offset: np.ndarray = np.where(group_b, p.shift, -p.shift)[:, None]
    shifted: np.ndarray = np.clip(raw + offset, 0.0, 1.0)

    return pd.DataFrame({
        "x1_raw": raw[:, 0],
        "x2_raw": raw[:, 1],
        "x1": shifted[:, 0],
        "x2": shifted[:, 1],
        "s": group_b.astype(int),
        "y": y,
    })


def generate_unfair2d(p: Unfair2dParams) -> TabularDataset:
    """
    Synthetic dataset of post-shift scores.

    Args:
        p: Generator parameters

    Returns:
        TabularDataset with features (x1, x2)
    """
    frame: pd.DataFrame = generate_unfair2d_frame(p)
    return TabularDataset(
        X=frame[["x1", "x2"]].to_numpy(),
        y=frame["y"].to_numpy(),
        s=frame["s"].to_numpy(),
        feature_names=("x1", "x2")
    )


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def min_max_normalize(X: np.ndarray) -> np.ndarray:
    """
    Rescale every column to [0, 1]; constant columns become 0.5.

    Args:
        X: (m, n) finite matrix

    Returns:
        np.ndarray: (x - min_j) / (max_j - min_j) per column
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InvalidInputError(f"expected a matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("features must be finite")
    if X.shape[0] == 0:
        return X.copy()

    low: np.ndarray = X.min(axis=0)
    span: np.ndarray = X.max(axis=0) - low
    varying: np.ndarray = span > 0.0
    return np.where(varying, (X - low) / np.where(varying, span, 1.0), 0.5)


def load_schema(path: Union[str, Path]) -> DatasetSchema:
    """
    Read a dataset schema JSON file.

    Args:
        path: Schema file path

    Returns:
        DatasetSchema
    """
    try:
        document: object = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise ConfigError(f"cannot read schema {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from e
    try:
        return DatasetSchema.model_validate(document)
    except ValidationError as e:
        raise ConfigError(f"{path}: {format_validation_error(e)}") from e


def format_validation_error(error: ValidationError) -> str:
    """One `dotted.path: message` entry per pydantic error."""
    return "; ".join(
        f"{'.'.join(str(part) for part in item['loc']) or '<root>'}: {item['msg']}"
        for item in error.errors()
    )


def _binarize(column: pd.Series, literals: list[str]) -> pd.Series:
    return column.str.strip().isin([literal.strip() for literal in literals]).astype(int)


def load_csv(path: Union[str, Path], schema: DatasetSchema) -> TabularDataset:
    """
    Load a CSV file into a normalized TabularDataset.

    Rows with a missing or unparseable value in any selected column are
    dropped and counted; in strict mode an unparseable feature cell raises.

    Args:
        path: UTF-8 CSV file
        schema: Column mapping and binarization rules

    Returns:
        TabularDataset with min-max normalized features
    """
    try:
        frame: pd.DataFrame = pd.read_csv(
            path,
            sep=schema.delimiter,
            header=0 if schema.header else None,
            names=None if schema.header else schema.column_names,
            dtype=str,
            keep_default_na=False,
            na_values=schema.na_values,
            skipinitialspace=True,
            encoding="utf-8",
        )
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DatasetError(f"cannot read {path}: {e}") from e

    frame.columns = [str(name).strip() for name in frame.columns]
    selected: list[str] = [*schema.features, schema.label, schema.sensitive]
    missing: list[str] = [name for name in selected if name not in frame.columns]
    if missing:
        raise DatasetError(f"{path}: missing column(s) {', '.join(missing)}")

    raw: pd.DataFrame = frame[schema.features].apply(lambda col: col.str.strip())
    features: pd.DataFrame = raw.apply(pd.to_numeric, errors="coerce")
    features = features.where(np.isfinite(features))
    unparseable: pd.DataFrame = features.isna() & raw.notna() & (raw != "")
    if schema.strict and unparseable.to_numpy().any():
        row, col = np.argwhere(unparseable.to_numpy())[0]
        raise DatasetError(
            f"{path}: non-numeric value {raw.iat[row, col]!r} in column {schema.features[col]}"
        )

    keep: pd.Series = (
        features.notna().all(axis=1)
        & frame[schema.label].notna() & (frame[schema.label].str.strip() != "")
        & frame[schema.sensitive].notna() & (frame[schema.sensitive].str.strip() != "")
    )
    dropped: int = int((~keep).sum())
    if dropped:
        debug_warning(f"[Data] Dropped {dropped} of {len(frame)} rows from {path}")
    if not keep.any():
        raise DatasetError(f"{path}: no usable rows")

    labels: pd.Series = _binarize(frame.loc[keep, schema.label], schema.label_positive)
    if schema.label_invert:
        labels = 1 - labels
    sensitive: pd.Series = _binarize(frame.loc[keep, schema.sensitive], schema.sensitive_group1)

    debug_info(f"[Data] Loaded {int(keep.sum())} rows x {len(schema.features)} features from {path}")
    return TabularDataset(
        X=min_max_normalize(features.loc[keep].to_numpy(dtype=float)),
        y=labels.to_numpy(),
        s=sensitive.to_numpy(),
        feature_names=tuple(schema.features),
        dropped_rows=dropped
    )


def train_test_split(d: TabularDataset, test_fraction: float, seed: int) -> tuple[TabularDataset, TabularDataset]:
    """
    Seeded shuffle split into ceil(m (1 - f)) training rows and the rest.

    Args:
        d: Dataset to split
        test_fraction: Share of rows in the test split, in (0, 1)
        seed: Shuffle seed

    Returns:
        tuple: (train, test)
    """
    if not 0.0 < test_fraction < 1.0:
        raise InvalidInputError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    if d.m < 2:
        raise DatasetError("at least two rows are required to split")

    # Rounding first keeps 10 * 0.8 from landing on 8.000000000000002
    n_train: int = math.ceil(round(d.m * (1.0 - test_fraction), 9))
    if n_train >= d.m or n_train < 1:
        raise DatasetError(f"split of {d.m} rows at test_fraction {test_fraction} leaves an empty side")

    order: np.ndarray = np.random.default_rng(seed).permutation(d.m)
    return d.subset(order[:n_train]), d.subset(order[n_train:])
