"""
Tests for the group fairness gaps.
"""

from fractions import Fraction

import numpy as np
import pytest

from models.errors import InvalidInputError, UndefinedMetricError
from services.fairness_service import (
    UNDEFINED,
    FairnessReport,
    GroupCounts,
    count_improvements,
    fairness_report,
    gap_to_float,
    report_from_counts,
    tally,
)


def _counts() -> GroupCounts:
    n = np.zeros((2, 2, 2), dtype=np.int64)
    n[0, 0, 0], n[0, 1, 0], n[1, 0, 0], n[1, 1, 0] = 4, 1, 2, 3
    n[0, 0, 1], n[0, 1, 1], n[1, 0, 1], n[1, 1, 1] = 2, 2, 1, 5
    return GroupCounts(n=n)


def _brute_gap(num_mask, den_mask, s) -> Fraction | object:
    rates = []
    for group in (0, 1):
        den = int(np.sum(den_mask & (s == group)))
        if den == 0:
            return UNDEFINED
        rates.append(Fraction(int(np.sum(num_mask & den_mask & (s == group))), den))
    return abs(rates[1] - rates[0])


def test_tally_counts_every_cell():
    c = tally([1, 0, 1, 1], [1, 1, 0, 1], [0, 1, 1, 0])
    assert c.total == 4
    assert c.n[1, 1, 0] == 2
    assert c.n[1, 0, 1] == 1
    assert c.n[0, 1, 1] == 1
    assert c.as_dict()["n_y1_yhat1_s0"] == 2
    assert sum(c.as_dict().values()) == 4


def test_independence_half():
    report = fairness_report([1, 1, 0, 0], [0, 1, 0, 1], [0, 0, 1, 1])
    assert report.independence == Fraction(1)
    report = fairness_report([1, 0, 0, 0], [0, 1, 0, 1], [0, 0, 1, 1])
    assert report.independence == Fraction(1, 2)


def test_separation_fixture():
    report = fairness_report([1, 0, 1, 0], [1, 1, 0, 0], [0, 1, 0, 1])
    assert (report.separation_y0, report.separation_y1) == (Fraction(1), Fraction(1))


def test_sufficiency_fixture():
    report = fairness_report([1, 1, 0, 0], [1, 0, 0, 1], [0, 1, 0, 1])
    assert (report.sufficiency_yhat0, report.sufficiency_yhat1) == (Fraction(1), Fraction(1))


def test_gaps_from_hand_counts():
    report = report_from_counts(_counts())
    assert report.gaps() == {
        "ind": Fraction(3, 10),
        "sep_y0": Fraction(3, 10),
        "sep_y1": Fraction(7, 30),
        "suf_yhat0": Fraction(0),
        "suf_yhat1": Fraction(1, 28),
    }


def test_single_group_is_undefined():
    report = fairness_report([1, 0, 1], [1, 0, 0], [0, 0, 0])
    assert all(gap is UNDEFINED for gap in report.gaps().values())
    assert report.as_floats()["ind"] is None
    assert not UNDEFINED


def test_strict_mode_raises_on_empty_group():
    with pytest.raises(UndefinedMetricError):
        fairness_report([1, 0, 1], [1, 0, 0], [0, 0, 0], strict=True)


def test_strict_mode_passes_when_all_defined():
    report = report_from_counts(_counts(), strict=True)
    assert report.independence == Fraction(3, 10)


@pytest.mark.parametrize(
    "preds, labels, sensitive",
    [
        ([1, 0], [1, 0], [0]),
        ([1, 2], [1, 0], [0, 1]),
        ([], [], []),
        ([[1]], [[1]], [[0]]),
    ],
)
def test_invalid_inputs_rejected(preds, labels, sensitive):
    with pytest.raises(InvalidInputError):
        fairness_report(preds, labels, sensitive)


def test_gaps_match_brute_force(rng):
    for _ in range(500):
        m = int(rng.integers(1, 51))
        yhat = rng.integers(0, 2, m)
        y = rng.integers(0, 2, m)
        s = rng.integers(0, 2, m)
        report = fairness_report(yhat, y, s)
        everyone = np.ones(m, dtype=bool)
        expected = {
            "ind": _brute_gap(yhat == 1, everyone, s),
            "sep_y0": _brute_gap(yhat == 1, y == 0, s),
            "sep_y1": _brute_gap(yhat == 1, y == 1, s),
            "suf_yhat0": _brute_gap(y == 1, yhat == 0, s),
            "suf_yhat1": _brute_gap(y == 1, yhat == 1, s),
        }
        for key, gap in report.gaps().items():
            reference = expected[key]
            if reference is UNDEFINED:
                assert gap is UNDEFINED
            else:
                # Exact ratios compared by cross-multiplication
                assert gap.numerator * reference.denominator == reference.numerator * gap.denominator
                assert 0 <= gap <= 1


def test_swapping_groups_leaves_gaps_unchanged(rng):
    for _ in range(50):
        m = int(rng.integers(2, 40))
        yhat, y, s = (rng.integers(0, 2, m) for _ in range(3))
        assert fairness_report(yhat, y, s) == fairness_report(yhat, y, 1 - s)


def test_independence_ignores_labels(rng):
    yhat, y, s = (rng.integers(0, 2, 30) for _ in range(3))
    shuffled = rng.permutation(y)
    assert fairness_report(yhat, y, s).independence == fairness_report(yhat, shuffled, s).independence


def test_count_improvements():
    baseline = report_from_counts(_counts())
    better = FairnessReport(
        independence=Fraction(1, 10),
        separation_y0=Fraction(3, 10),
        separation_y1=Fraction(1, 30),
        sufficiency_yhat0=UNDEFINED,
        sufficiency_yhat1=Fraction(1, 2),
    )
    assert count_improvements(better, baseline) == (2, 4)
    assert count_improvements(baseline, baseline) == (0, 5)


def test_table_rows_repeat_independence():
    rows = report_from_counts(_counts()).to_table_rows()
    assert [row[0] for row in rows] == ["Independence", "Separation", "Sufficiency"]
    assert rows[0][1] == rows[0][2] == pytest.approx(0.3)
    assert rows[1] == ("Separation", pytest.approx(0.3), pytest.approx(7 / 30))
    assert rows[2][1] == 0.0


def test_gap_to_float():
    assert gap_to_float(Fraction(1, 4)) == 0.25
    assert gap_to_float(UNDEFINED) is None


def test_report_table_for_constructed_synthetic_counts():
    n = np.zeros((2, 2, 2), dtype=np.int64)
    # group s = 0: 498 positives, 108 of them predicted 1, 291 false positives
    n[0, 0, 0], n[0, 1, 0], n[1, 0, 0], n[1, 1, 0] = 211, 291, 390, 108
    # group s = 1: 641 positives, 254 predicted 1, 297 false positives
    n[0, 0, 1], n[0, 1, 1], n[1, 0, 1], n[1, 1, 1] = 62, 297, 387, 254
    report = report_from_counts(GroupCounts(n=n))

    assert report.independence == Fraction(19, 125)
    assert report.separation_y0 == abs(Fraction(297, 359) - Fraction(291, 502))
    assert report.sufficiency_yhat1 == abs(Fraction(254, 551) - Fraction(108, 399))
    rounded = [(name, round(a, 3), round(b, 3)) for name, a, b in report.to_table_rows()]
    assert rounded == [
        ("Independence", 0.152, 0.152),
        ("Separation", 0.248, 0.179),
        ("Sufficiency", 0.213, 0.190),
    ]
