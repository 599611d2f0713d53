"""
Tests for the synthetic generator, CSV ingestion, normalization and splitting.
"""

from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError

from models.errors import ConfigError, DatasetError, InvalidInputError
from models.schemas import DatasetSchema, Unfair2dParams
from services.data_service import (
    TabularDataset,
    generate_unfair2d,
    generate_unfair2d_frame,
    load_csv,
    load_schema,
    min_max_normalize,
    train_test_split,
)

SCHEMA_DIR = Path(__file__).parent / "schemas"


def _schema(**overrides) -> DatasetSchema:
    fields = {
        "features": ["f1", "f2"],
        "label": "label",
        "label_positive": ["yes"],
        "sensitive": "group",
        "sensitive_group1": ["b"],
    }
    fields.update(overrides)
    return DatasetSchema(**fields)


def _write(tmp_path: Path, text: str, name: str = "data.csv") -> Path:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Synthetic generator
# ---------------------------------------------------------------------------

def test_generator_is_deterministic():
    params = Unfair2dParams(m=300, seed=5)
    first, second = generate_unfair2d(params), generate_unfair2d(params)
    np.testing.assert_array_equal(first.X, second.X)
    np.testing.assert_array_equal(first.y, second.y)
    np.testing.assert_array_equal(first.s, second.s)


def test_generator_output_domain(small_synthetic):
    assert small_synthetic.m == 200
    assert small_synthetic.feature_names == ("x1", "x2")
    assert 0.0 <= small_synthetic.X.min() and small_synthetic.X.max() <= 1.0
    assert set(np.unique(small_synthetic.y)) <= {0, 1}
    assert set(np.unique(small_synthetic.s)) <= {0, 1}


def test_labels_follow_the_unshifted_boundary():
    frame = generate_unfair2d_frame(Unfair2dParams(m=500, seed=3))
    expected = (frame["x1_raw"] + frame["x2_raw"] > 1.2).astype(int)
    np.testing.assert_array_equal(frame["y"].to_numpy(), expected.to_numpy())


def test_zero_shift_groups_are_exchangeable():
    m = 10_000
    d = generate_unfair2d(Unfair2dParams(m=m, seed=8, shift=0.0))
    bound = 4.0 / np.sqrt(m)
    for j in range(2):
        gap = d.X[d.s == 1, j].mean() - d.X[d.s == 0, j].mean()
        assert abs(gap) <= bound
    assert abs(d.y[d.s == 1].mean() - d.y[d.s == 0].mean()) <= bound


def test_group_mean_gap_grows_with_shift():
    gaps = []
    for shift in (0.0, 0.1, 0.2, 0.3):
        d = generate_unfair2d(Unfair2dParams(m=4000, seed=2, shift=shift))
        gaps.append(d.X[d.s == 1, 0].mean() - d.X[d.s == 0, 0].mean())
    assert all(later > earlier for earlier, later in zip(gaps, gaps[1:]))


def test_shift_moves_some_negatives_over_the_boundary():
    frame = generate_unfair2d_frame(Unfair2dParams())
    lifted = (frame["s"] == 1) & (frame["y"] == 0) & (frame["x1"] + frame["x2"] > 1.2)
    assert int(lifted.sum()) > 0


def test_shift_is_monotone_per_sample():
    frame = generate_unfair2d_frame(Unfair2dParams(m=1000, seed=5, shift=0.1))
    group_b = frame["s"] == 1
    for j in ("x1", "x2"):
        moved = frame[j] - frame[f"{j}_raw"]
        assert (moved[group_b] >= 0.0).all()
        assert (moved[~group_b] <= 0.0).all()
        assert moved.abs().max() <= 0.1 + 1e-12


@pytest.mark.parametrize(
    "overrides",
    [{"m": 0}, {"shift": 0.5}, {"shift": -0.1}, {"boundary": (0.0, 0.0, 1.0)}, {"group_prob": 1.5}, {"extra": 1}],
)
def test_invalid_generator_params(overrides):
    with pytest.raises(ValidationError):
        Unfair2dParams(**overrides)


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

def test_min_max_normalize_column():
    np.testing.assert_allclose(min_max_normalize(np.array([[1.0], [3.0], [5.0]])), [[0.0], [0.5], [1.0]])


def test_constant_column_maps_to_half():
    result = min_max_normalize(np.array([[2.0, 0.0], [2.0, 4.0]]))
    np.testing.assert_array_equal(result, [[0.5, 0.0], [0.5, 1.0]])


def test_normalize_is_idempotent(rng):
    X = min_max_normalize(rng.normal(size=(40, 3)))
    np.testing.assert_allclose(min_max_normalize(X), X, atol=1e-15)


def test_normalize_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        min_max_normalize(np.array([[1.0], [np.inf]]))


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def test_load_csv_normalizes_and_binarizes(tmp_path):
    path = _write(tmp_path, "f1,f2,label,group\n1,7,yes,a\n3,7,no,b\n5,7,yes,b\n")
    d = load_csv(path, _schema())
    np.testing.assert_allclose(d.X[:, 0], [0.0, 0.5, 1.0])
    np.testing.assert_array_equal(d.X[:, 1], [0.5, 0.5, 0.5])
    np.testing.assert_array_equal(d.y, [1, 0, 1])
    np.testing.assert_array_equal(d.s, [0, 1, 1])
    assert d.dropped_rows == 0


def test_load_csv_label_invert(tmp_path):
    path = _write(tmp_path, "f1,f2,label,group\n1,2,yes,a\n3,4,no,b\n")
    d = load_csv(path, _schema(label_invert=True))
    np.testing.assert_array_equal(d.y, [0, 1])


def test_load_csv_drops_missing_rows(tmp_path):
    path = _write(tmp_path, "f1,f2,label,group\n1,2,yes,a\n?,4,no,b\n3,x,no,b\n5,6,,a\n7,8,no,b\n")
    d = load_csv(path, _schema())
    assert d.m == 2
    assert d.dropped_rows == 3
    np.testing.assert_array_equal(d.y, [1, 0])


def test_load_csv_strict_rejects_unparseable_cell(tmp_path):
    path = _write(tmp_path, "f1,f2,label,group\n1,2,yes,a\n3,x,no,b\n")
    with pytest.raises(DatasetError, match="f2"):
        load_csv(path, _schema(strict=True))


def test_load_csv_strict_still_drops_missing(tmp_path):
    path = _write(tmp_path, "f1,f2,label,group\n1,2,yes,a\n?,4,no,b\n3,5,no,b\n")
    assert load_csv(path, _schema(strict=True)).dropped_rows == 1


def test_load_csv_missing_column(tmp_path):
    path = _write(tmp_path, "f1,label,group\n1,yes,a\n")
    with pytest.raises(DatasetError, match="f2"):
        load_csv(path, _schema())


def test_load_csv_no_usable_rows(tmp_path):
    path = _write(tmp_path, "f1,f2,label,group\n?,1,yes,a\n")
    with pytest.raises(DatasetError):
        load_csv(path, _schema())


def test_load_csv_missing_file(tmp_path):
    with pytest.raises(DatasetError):
        load_csv(tmp_path / "absent.csv", _schema())


def test_load_adult_style_rows(tmp_path):
    rows = [
        "39, State-gov, 77516, Bachelors, 13, Never-married, Adm-clerical, Not-in-family, White, Male, 2174, 0, 40, United-States, <=50K",
        "50, Self-emp, 83311, Bachelors, 13, Married, Exec, Husband, White, Male, 0, 0, 13, United-States, >50K",
        "38, Private, 215646, HS-grad, 9, Divorced, Handlers, Not-in-family, White, Female, 0, 0, 40, ?, <=50K.",
        "53, ?, 234721, 11th, 7, Married, ?, Husband, Black, Male, 0, 0, 40, United-States, >50K.",
    ]
    path = _write(tmp_path, "\n".join(rows) + "\n", "adult.data")
    d = load_csv(path, load_schema(SCHEMA_DIR / "adult.schema.json"))
    assert d.m == 4
    assert d.n_in == 5
    np.testing.assert_array_equal(d.y, [1, 0, 1, 0])
    np.testing.assert_array_equal(d.s, [1, 1, 0, 1])
    assert d.X.min() >= 0.0 and d.X.max() <= 1.0


def test_header_less_schema_requires_column_names():
    with pytest.raises(ValidationError):
        _schema(header=False)


def test_load_schema_reports_position(tmp_path):
    path = _write(tmp_path, '{"features": [', "broken.json")
    with pytest.raises(ConfigError, match="line 1"):
        load_schema(path)


def test_load_schema_reports_field(tmp_path):
    path = _write(tmp_path, '{"features": [], "label": "y", "label_positive": ["1"], '
                            '"sensitive": "s", "sensitive_group1": ["1"]}', "empty.json")
    with pytest.raises(ConfigError, match="features"):
        load_schema(path)


def test_shipped_schemas_parse():
    assert load_schema(SCHEMA_DIR / "lsat.schema.json").features == ["lsat", "ugpa"]
    assert load_schema(SCHEMA_DIR / "adult.schema.json").column_names[-1] == "salary"


# ---------------------------------------------------------------------------
# Dataset invariants and splitting
# ---------------------------------------------------------------------------

def test_dataset_rejects_out_of_range_features():
    with pytest.raises(DatasetError):
        TabularDataset(np.array([[1.5]]), np.array([0]), np.array([0]), ("a",))


def test_dataset_rejects_non_binary_labels():
    with pytest.raises(DatasetError):
        TabularDataset(np.array([[0.5]]), np.array([2]), np.array([0]), ("a",))


def _indexed(m: int) -> TabularDataset:
    X = (np.arange(m, dtype=float) / max(m - 1, 1))[:, None]
    return TabularDataset(X, np.arange(m) % 2, np.zeros(m, dtype=int), ("i",))


def test_split_sizes():
    train, test = train_test_split(_indexed(10), 0.2, seed=0)
    assert (train.m, test.m) == (8, 2)
    train, test = train_test_split(_indexed(10), 0.25, seed=0)
    assert (train.m, test.m) == (8, 2)


def test_split_is_a_deterministic_partition():
    d = _indexed(25)
    train, test = train_test_split(d, 0.3, seed=4)
    again, _ = train_test_split(d, 0.3, seed=4)
    np.testing.assert_array_equal(train.X, again.X)
    union = np.sort(np.concatenate([train.X[:, 0], test.X[:, 0]]))
    np.testing.assert_array_equal(union, d.X[:, 0])


def test_split_rejects_empty_side():
    with pytest.raises(DatasetError):
        train_test_split(_indexed(2), 0.1, seed=0)
    with pytest.raises(InvalidInputError):
        train_test_split(_indexed(10), 1.0, seed=0)
