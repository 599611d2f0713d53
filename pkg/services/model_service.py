"""
Model Service - Affine classifier with binary cross-entropy.

Closed-form loss, input derivatives and parameter gradients of
L(x) = BCE(sigmoid(w^T x + b), y). Every function accepts a single sample;
the `*_batch` helpers evaluate the same formulas row-wise for the trainer.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from models.errors import InvalidInputError
from services.linalg_service import SymmetricMatrix

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class AffineModel:
    """
    Affine logit z = w^T x + b.

    Attributes:
        w: Weight vector of length n_in
        b: Scalar bias
    """
    w: np.ndarray
    b: float

    def __post_init__(self) -> None:
        w: np.ndarray = np.array(self.w, dtype=float).reshape(-1)
        if not np.all(np.isfinite(w)) or not np.isfinite(self.b):
            raise InvalidInputError("model parameters must be finite")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))

    @classmethod
    def zeros(cls, n_in: int) -> "AffineModel":
        return cls(w=np.zeros(n_in), b=0.0)

    @property
    def n_in(self) -> int:
        return self.w.shape[0]


@dataclass(frozen=True)
class LossLocalModel:
    """
    Second-order Taylor data of the loss around one input.

    Attributes:
        value: Loss at x
        grad: Gradient with respect to x
        hess: Hessian with respect to x (rank one, PSD for the affine model)
    """
    value: float
    grad: np.ndarray
    hess: SymmetricMatrix

    def quadratic_model(self, delta: np.ndarray) -> float:
        """Evaluate value + grad^T delta + 0.5 delta^T hess delta."""
        delta = np.asarray(delta, dtype=float)
        return float(self.value + self.grad @ delta + 0.5 * delta @ self.hess.entries @ delta)


def sigmoid(z: ArrayLike) -> ArrayLike:
    """
    Logistic function, overflow-free for any finite input.

    Args:
        z: Scalar or array of logits

    Returns:
        1 / (1 + exp(-z)) with the same shape as z
    """
    z = np.asarray(z, dtype=float)
    decay: np.ndarray = np.exp(-np.abs(z))
    result: np.ndarray = np.where(z >= 0.0, 1.0 / (1.0 + decay), decay / (1.0 + decay))
    return result if result.ndim else float(result)


def sigmoid_prime(z: ArrayLike) -> ArrayLike:
    """Derivative sigma(z) (1 - sigma(z)), written as sigma(z) sigma(-z)."""
    return sigmoid(z) * sigmoid(-z)


def _check_sample(m: AffineModel, x: np.ndarray, y: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != m.w.shape:
        raise InvalidInputError(f"input of length {m.n_in} expected, got shape {x.shape}")
    if y not in (0, 1):
        raise InvalidInputError(f"label must be 0 or 1, got {y!r}")
    return x


def predict_logit(m: AffineModel, x: np.ndarray) -> float:
    """
    Affine logit w^T x + b.

    Args:
        m: The model
        x: Input vector

    Returns:
        float: The logit
    """
    x = np.asarray(x, dtype=float)
    if x.shape != m.w.shape:
        raise InvalidInputError(f"input of length {m.n_in} expected, got shape {x.shape}")
    return float(m.w @ x + m.b)


def bce_from_logit(z: ArrayLike, y: ArrayLike) -> ArrayLike:
    """
    Binary cross-entropy in log-sum-exp form.

    softplus(z) for y = 0 and softplus(-z) for y = 1, which equals
    max(z, 0) - z y + log(1 + exp(-|z|)) without ever taking log(0).
    """
    return np.logaddexp(0.0, np.where(np.asarray(y) == 1, -np.asarray(z), z))


def bce_loss(m: AffineModel, x: np.ndarray, y: int) -> float:
    """
    Loss of one labelled sample.

    Args:
        m: The model
        x: Input vector
        y: Label in {0, 1}

    Returns:
        float: Nonnegative cross-entropy
    """
    x = _check_sample(m, x, y)
    return float(bce_from_logit(m.w @ x + m.b, y))


def loss_local_model(m: AffineModel, x: np.ndarray, y: int) -> LossLocalModel:
    """
    Loss, input gradient and input Hessian at x.

    grad = (sigma(z) - y) w and hess = sigma'(z) w w^T.

    Args:
        m: The model
        x: Input vector
        y: Label in {0, 1}

    Returns:
        LossLocalModel at x
    """
    x = _check_sample(m, x, y)
    z: float = float(m.w @ x + m.b)
    residual: float = float(sigmoid(z)) - y
    curvature: float = float(sigmoid_prime(z))
    return LossLocalModel(
        value=float(bce_from_logit(z, y)),
        grad=residual * m.w,
        hess=SymmetricMatrix(curvature * np.outer(m.w, m.w))
    )


def grad_params(m: AffineModel, x: np.ndarray, y: int) -> tuple[np.ndarray, float]:
    """
    Gradient of the loss with respect to (w, b) at a fixed input.

    Args:
        m: The model
        x: Input vector (already perturbed, if any)
        y: Label in {0, 1}

    Returns:
        tuple: ((sigma(z) - y) x, sigma(z) - y)
    """
    x = _check_sample(m, x, y)
    residual: float = float(sigmoid(m.w @ x + m.b)) - y
    return residual * x, residual


def logits_batch(m: AffineModel, X: np.ndarray) -> np.ndarray:
    """Row-wise logits of an (m, n) matrix."""
    return X @ m.w + m.b


def local_model_batch(m: AffineModel, X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Input gradients and Hessians of every row.

    Returns:
        tuple: (grads of shape (k, n), hessians of shape (k, n, n))
    """
    z: np.ndarray = logits_batch(m, X)
    grads: np.ndarray = (sigmoid(z) - y)[:, None] * m.w[None, :]
    outer: np.ndarray = np.outer(m.w, m.w)
    hessians: np.ndarray = sigmoid_prime(z)[:, None, None] * outer[None, :, :]
    return grads, hessians


def mean_grad_params_batch(m: AffineModel, X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Mean parameter gradient over the rows of X."""
    residual: np.ndarray = sigmoid(logits_batch(m, X)) - y
    return residual @ X / X.shape[0], float(np.mean(residual))
