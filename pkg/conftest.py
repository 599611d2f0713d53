"""
Shared pytest fixtures.
"""

import numpy as np
import pytest

from models.schemas import Unfair2dParams
from services.data_service import TabularDataset, generate_unfair2d
from services.model_service import AffineModel


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def rank_one_model() -> AffineModel:
    """w = (3, 4), b = 0: at x = 0 the logit is 0 and ||w|| = 5."""
    return AffineModel(np.array([3.0, 4.0]), 0.0)


@pytest.fixture(scope="session")
def synthetic_pair() -> tuple[TabularDataset, TabularDataset]:
    """Default synthetic train split and its seed + 1 test split."""
    params = Unfair2dParams()
    return generate_unfair2d(params), generate_unfair2d(params.model_copy(update={"seed": params.seed + 1}))


@pytest.fixture
def small_synthetic() -> TabularDataset:
    return generate_unfair2d(Unfair2dParams(m=200, seed=11))


def random_affine_instance(rng: np.random.Generator, n: int, w_scale: float = 1.0) -> tuple[AffineModel, np.ndarray, int]:
    """Random (model, x, y) with moderate logits; ||w|| <= w_scale."""
    w: np.ndarray = rng.standard_normal(n)
    w *= rng.uniform(0.2, 1.0) * w_scale / np.linalg.norm(w)
    x: np.ndarray = rng.uniform(0.0, 1.0, n)
    b: float = float(rng.uniform(-0.5, 0.5)) - float(w @ x)
    return AffineModel(w, b), x, int(rng.integers(0, 2))
