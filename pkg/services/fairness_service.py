"""
Fairness Service - Group fairness gaps of binary classifiers.

Every gap is an absolute difference of two empirical conditional
frequencies, computed as exact count ratios. A gap whose conditioning cell
is empty is UNDEFINED rather than an error, unless the caller asks for
strict mode.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from models.errors import InvalidInputError, UndefinedMetricError


class _Undefined:
    """Marker for a gap that conditions on an empty group."""

    _instance: "_Undefined | None" = None

    def __new__(cls) -> "_Undefined":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNDEFINED"

    def __bool__(self) -> bool:
        return False


UNDEFINED = _Undefined()

Gap = Union[Fraction, _Undefined]


@dataclass(frozen=True)
class GroupCounts:
    """
    Joint counts of (label, prediction, sensitive group).

    Attributes:
        n: Integer array indexed n[y, yhat, s]
    """
    n: np.ndarray

    @property
    def total(self) -> int:
        return int(self.n.sum())

    def as_dict(self) -> dict[str, int]:
        """Flat `n_y{y}_yhat{yhat}_s{s}` mapping."""
        return {
            f"n_y{y}_yhat{yhat}_s{s}": int(self.n[y, yhat, s])
            for y in (0, 1) for yhat in (0, 1) for s in (0, 1)
        }


@dataclass(frozen=True)
class FairnessReport:
    """Five fairness gaps of one classifier on one split."""
    independence: Gap
    separation_y0: Gap
    separation_y1: Gap
    sufficiency_yhat0: Gap
    sufficiency_yhat1: Gap

    def gaps(self) -> dict[str, Gap]:
        return {
            "ind": self.independence,
            "sep_y0": self.separation_y0,
            "sep_y1": self.separation_y1,
            "suf_yhat0": self.sufficiency_yhat0,
            "suf_yhat1": self.sufficiency_yhat1,
        }

    def as_floats(self) -> dict[str, float | None]:
        """Gaps as floats, UNDEFINED as None."""
        return {key: gap_to_float(gap) for key, gap in self.gaps().items()}

    def to_table_rows(self) -> list[tuple[str, float | None, float | None]]:
        """
        Rows (metric, first column, second column) of the comparison table.

        Independence does not condition on anything, so its value fills both
        columns.
        """
        return [
            ("Independence", gap_to_float(self.independence), gap_to_float(self.independence)),
            ("Separation", gap_to_float(self.separation_y0), gap_to_float(self.separation_y1)),
            ("Sufficiency", gap_to_float(self.sufficiency_yhat0), gap_to_float(self.sufficiency_yhat1)),
        ]


def gap_to_float(gap: Gap) -> float | None:
    return None if gap is UNDEFINED else float(gap)


def _as_binary(values: Sequence[int], name: str) -> np.ndarray:
    array: np.ndarray = np.asarray(values)
    if array.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional")
    if not np.all(np.isin(array, (0, 1))):
        raise InvalidInputError(f"{name} must contain only 0 and 1")
    return array.astype(int)


def tally(preds: Sequence[int], labels: Sequence[int], sensitive: Sequence[int]) -> GroupCounts:
    """
    Count samples per (label, prediction, group) cell.

    Args:
        preds: Binary predictions
        labels: Binary ground truth
        sensitive: Binary sensitive attribute

    Returns:
        GroupCounts over the eight cells
    """
    yhat: np.ndarray = _as_binary(preds, "preds")
    y: np.ndarray = _as_binary(labels, "labels")
    s: np.ndarray = _as_binary(sensitive, "sensitive")
    if not (yhat.shape == y.shape == s.shape):
        raise InvalidInputError(f"length mismatch: preds {yhat.size}, labels {y.size}, sensitive {s.size}")
    if yhat.size == 0:
        raise InvalidInputError("at least one sample is required")

    counts: np.ndarray = np.zeros((2, 2, 2), dtype=np.int64)
    np.add.at(counts, (y, yhat, s), 1)
    return GroupCounts(n=counts)


def _rate_gap(hits: np.ndarray, totals: np.ndarray) -> Gap:
    """|hits[1]/totals[1] - hits[0]/totals[0]| over the two groups, exact."""
    if totals[0] == 0 or totals[1] == 0:
        return UNDEFINED
    return abs(Fraction(int(hits[1]), int(totals[1])) - Fraction(int(hits[0]), int(totals[0])))


def independence_gap(c: GroupCounts) -> Gap:
    """|P(yhat=1 | s=1) - P(yhat=1 | s=0)|."""
    return _rate_gap(c.n[:, 1, :].sum(axis=0), c.n.sum(axis=(0, 1)))


def separation_gaps(c: GroupCounts) -> tuple[Gap, Gap]:
    """|P(yhat=1 | y, s=1) - P(yhat=1 | y, s=0)| for y = 0 and y = 1."""
    return (
        _rate_gap(c.n[0, 1, :], c.n[0].sum(axis=0)),
        _rate_gap(c.n[1, 1, :], c.n[1].sum(axis=0)),
    )


def sufficiency_gaps(c: GroupCounts) -> tuple[Gap, Gap]:
    """|P(y=1 | yhat, s=1) - P(y=1 | yhat, s=0)| for yhat = 0 and yhat = 1."""
    return (
        _rate_gap(c.n[1, 0, :], c.n[:, 0, :].sum(axis=0)),
        _rate_gap(c.n[1, 1, :], c.n[:, 1, :].sum(axis=0)),
    )


def report_from_counts(c: GroupCounts, strict: bool = False) -> FairnessReport:
    """Assemble a FairnessReport; strict mode rejects UNDEFINED gaps."""
    separation: tuple[Gap, Gap] = separation_gaps(c)
    sufficiency: tuple[Gap, Gap] = sufficiency_gaps(c)
    report = FairnessReport(
        independence=independence_gap(c),
        separation_y0=separation[0],
        separation_y1=separation[1],
        sufficiency_yhat0=sufficiency[0],
        sufficiency_yhat1=sufficiency[1],
    )
    if strict:
        missing: list[str] = [key for key, gap in report.gaps().items() if gap is UNDEFINED]
        if missing:
            raise UndefinedMetricError(f"empty conditioning group for {', '.join(missing)}")
    return report


def fairness_report(
    preds: Sequence[int],
    labels: Sequence[int],
    sensitive: Sequence[int],
    strict: bool = False
) -> FairnessReport:
    """
    All five gaps of one prediction vector.

    Args:
        preds: Binary predictions
        labels: Binary ground truth
        sensitive: Binary sensitive attribute
        strict: Raise UndefinedMetricError instead of returning UNDEFINED

    Returns:
        FairnessReport
    """
    return report_from_counts(tally(preds, labels, sensitive), strict=strict)


def count_improvements(report: FairnessReport, baseline: FairnessReport) -> tuple[int, int]:
    """
    Count gaps strictly smaller than the baseline's.

    Gaps that are UNDEFINED on either side are not comparable.

    Returns:
        tuple: (improved, comparable)
    """
    improved: int = 0
    comparable: int = 0
    for key, gap in report.gaps().items():
        reference: Gap = baseline.gaps()[key]
        if gap is UNDEFINED or reference is UNDEFINED:
            continue
        comparable += 1
        # Cross-multiplied integer comparison of the two ratios
        if gap.numerator * reference.denominator < reference.numerator * gap.denominator:
            improved += 1
    return improved, comparable
