"""
Solver Service - Inner maximization of the loss over an L2 ball.

Three strategies find the per-sample perturbation delta with ||delta|| <= r
that (approximately) maximizes the loss:

    TRS     second-order model, eigendecomposition + bisection on lambda
    PGD     projected gradient ascent on the true loss
    RANDOM  Gaussian direction rescaled to the radius

The TRS and PGD kernels operate on stacks of samples. Every sample keeps its
own bracket (or step sequence), tolerance check and stop flag, so a stack of
k problems returns what k independent single-sample solves would. Kernels do
not log; anomalies come back as per-row flags.
"""

from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from config import SolverConfig
from models.errors import (
    BracketError,
    InvalidInputError,
    PoleError,
    SolverFailureError,
)
from models.schemas import SolverKind, StepRule
from services.linalg_service import EigenDecomposition, jacobi_eig_batch, shifted_solve_rows
from services.model_service import (
    AffineModel,
    ArrayLike,
    LossLocalModel,
    bce_from_logit,
    logits_batch,
    sigmoid,
    sigmoid_prime,
)


@dataclass(frozen=True)
class PerturbationResult:
    """
    Solution of one inner problem.

    Attributes:
        delta: Perturbation of the input
        lam: Lagrange multiplier of the ball constraint
        delta_norm: Euclidean norm of delta
        boundary_active: Whether delta sits on the sphere of radius r
        iterations: Bisection or PGD iterations spent
        solver: Strategy that produced delta
        flagged: TRS took the hard-case branch, or PGD used its whole budget
    """
    delta: np.ndarray
    lam: float
    delta_norm: float
    boundary_active: bool
    iterations: int
    solver: SolverKind
    flagged: bool = False

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Return the perturbed input x + delta."""
        return np.asarray(x, dtype=float) + self.delta


@dataclass(frozen=True)
class PerturbationBatch:
    """Row-stacked perturbations of a batch of samples, flags as in PerturbationResult."""
    delta: np.ndarray
    lam: np.ndarray
    iterations: np.ndarray
    boundary_active: np.ndarray
    flagged: np.ndarray
    solver: SolverKind

    def result(self, i: int) -> PerturbationResult:
        delta: np.ndarray = self.delta[i].copy()
        return PerturbationResult(
            delta=delta,
            lam=float(self.lam[i]),
            delta_norm=float(np.linalg.norm(delta)),
            boundary_active=bool(self.boundary_active[i]),
            iterations=int(self.iterations[i]),
            solver=self.solver,
            flagged=bool(self.flagged[i])
        )


@dataclass(frozen=True)
class KktResiduals:
    """Violation magnitudes of the four optimality conditions."""
    stationarity: float
    primal: float
    dual: float
    complementarity: float


class LossOracle(Protocol):
    """Loss and delta-gradient of L(x + delta) for one fixed sample."""

    n_in: int

    def __call__(self, delta: np.ndarray) -> tuple[float, np.ndarray]:
        ...


@dataclass(frozen=True)
class AffineLossOracle:
    """LossOracle of the affine/BCE model at input x with label y."""
    model: AffineModel
    x: np.ndarray
    y: int

    @property
    def n_in(self) -> int:
        return self.model.n_in

    def __call__(self, delta: np.ndarray) -> tuple[float, np.ndarray]:
        z: float = float(self.model.w @ (self.x + delta) + self.model.b)
        return float(bce_from_logit(z, self.y)), (float(sigmoid(z)) - self.y) * self.model.w


def default_trs_tol(r: float) -> float:
    return SolverConfig.TRS_TOL_COEFF * max(1.0, r)


def default_pgd_alpha(r: float) -> float:
    return SolverConfig.PGD_ALPHA_FRACTION * r


def default_pgd_stop_tol(r: float) -> float:
    return SolverConfig.PGD_STOP_COEFF * max(1.0, r)


def boundary_band(r: float) -> float:
    return 1e-6 * max(1.0, r)


# ---------------------------------------------------------------------------
# Secular function and bracket
# ---------------------------------------------------------------------------

def _secular_rows(c: np.ndarray, d: np.ndarray, lam: np.ndarray, r: float) -> np.ndarray:
    """||(D - lam I)^-1 c|| - r for every row, c = Q^T grad."""
    return np.linalg.norm(c / (d - lam[:, None]), axis=1) - r


def secular_value(E: EigenDecomposition, grad: np.ndarray, lam: float, r: float) -> float:
    """
    Secular function g(lam) = ||delta(lam)|| - r.

    Args:
        E: Eigendecomposition of the Hessian
        grad: Gradient of the loss at x
        lam: Multiplier, not an eigenvalue
        r: Radius

    Returns:
        float: ||(D - lam I)^-1 Q^T grad|| - r
    """
    gap: np.ndarray = E.d - lam
    if np.any(np.abs(gap) <= SolverConfig.POLE_ATOL):
        raise PoleError(f"multiplier {lam!r} coincides with an eigenvalue")
    return float(np.linalg.norm((E.Q.T @ np.asarray(grad, dtype=float)) / gap) - r)


def lambda_upper_bound(d_max: ArrayLike, grad_norm: ArrayLike, n: int, r: float) -> ArrayLike:
    """
    Upper end of the bisection bracket.

    At |d_max| + sqrt(n) ||grad|| / r every |d_i - lam| is at least
    sqrt(n) ||grad|| / r, so the secular function is nonpositive there. For
    n = 1 that point is the root itself, so the bound is widened by a relative
    1e-12 to keep the evaluated sign nonpositive. Works elementwise
    on arrays of (d_max, grad_norm).
    """
    if r <= 0:
        raise InvalidInputError("radius must be positive")
    bound = (np.abs(d_max) + np.sqrt(n) * np.asarray(grad_norm) / r) * (1.0 + SolverConfig.BRACKET_MARGIN_COEFF)
    return bound if np.ndim(bound) else float(bound)


def lambda_lower_bound(d_max: ArrayLike) -> ArrayLike:
    """Pole-free lower end max(0, d_max) + 1e-9 max(1, |d_max|), elementwise."""
    bound = np.maximum(0.0, d_max) + SolverConfig.POLE_GUARD_COEFF * np.maximum(1.0, np.abs(d_max))
    return bound if np.ndim(bound) else float(bound)


def _bisect_rows(
    c: np.ndarray,
    d: np.ndarray,
    r: float,
    low: np.ndarray,
    high: np.ndarray,
    tol: float,
    max_iter: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Lockstep bisection over independent rows.

    Returns:
        tuple: (lam, iterations, converged) per row
    """
    lo: np.ndarray = low.astype(float).copy()
    hi: np.ndarray = high.astype(float).copy()
    lam: np.ndarray = 0.5 * (lo + hi)
    iterations: np.ndarray = np.zeros(lo.shape[0], dtype=int)
    width_tol: np.ndarray = SolverConfig.BISECT_WIDTH_COEFF * np.maximum(1.0, hi)
    done: np.ndarray = (hi - lo) < tol

    for _ in range(max_iter):
        active: np.ndarray = ~done
        if not active.any():
            break
        mid: np.ndarray = 0.5 * (lo + hi)
        value: np.ndarray = _secular_rows(c, d, mid, r)
        lam = np.where(active, mid, lam)
        iterations += active
        converged: np.ndarray = active & ((np.abs(value) <= tol) | ((hi - lo) <= width_tol))
        done |= converged
        moving: np.ndarray = active & ~converged
        lo = np.where(moving & (value > 0.0), mid, lo)
        hi = np.where(moving & (value <= 0.0), mid, hi)

    return lam, iterations, done


def bisect_lambda(
    E: EigenDecomposition,
    grad: np.ndarray,
    r: float,
    lambda_low: float,
    lambda_high: float,
    tol: float,
    max_iter: int = SolverConfig.TRS_MAX_ITER
) -> float:
    """
    Root of the secular function inside [lambda_low, lambda_high].

    Args:
        E: Eigendecomposition of the Hessian
        grad: Gradient of the loss
        r: Radius
        lambda_low: Lower end; the secular function must be positive just above it
        lambda_high: Upper end; the secular function must be nonpositive there
        tol: Accepted |g(lam)|
        max_iter: Halving budget

    Returns:
        float: lam with |g(lam)| <= tol (or a bracket narrower than 1e-12 max(1, lambda_high))
    """
    c: np.ndarray = (E.Q.T @ np.asarray(grad, dtype=float))[None, :]
    d: np.ndarray = E.d[None, :]
    low: np.ndarray = np.array([lambda_low], dtype=float)
    high: np.ndarray = np.array([lambda_high], dtype=float)

    if lambda_high - lambda_low >= tol:
        # Just above a pole the secular function tends to +inf
        low_value: float = (
            np.inf if np.any(np.abs(E.d - lambda_low) <= SolverConfig.POLE_ATOL)
            else float(_secular_rows(c, d, low, r)[0])
        )
        high_value: float = float(_secular_rows(c, d, high, r)[0])
        if not (low_value > 0.0 and high_value <= 0.0):
            raise BracketError(
                f"secular function has no sign change on [{lambda_low}, {lambda_high}]: "
                f"g(low)={low_value:.3e}, g(high)={high_value:.3e}"
            )

    lam, _, converged = _bisect_rows(c, d, r, low, high, tol, max_iter)
    if not converged[0]:
        raise SolverFailureError(f"bisection did not converge in {max_iter} iterations")
    return float(lam[0])


# ---------------------------------------------------------------------------
# Trust region subproblem
# ---------------------------------------------------------------------------

def trs_solve_batch(
    grads: np.ndarray,
    hessians: np.ndarray,
    r: float,
    tol: Optional[float] = None,
    max_iter: int = SolverConfig.TRS_MAX_ITER
) -> PerturbationBatch:
    """
    Maximize grad^T delta + 0.5 delta^T H delta over ||delta|| <= r, row by row.

    Branches per row: zero gradient returns delta = 0; a strictly concave
    model whose stationary point lies inside the ball returns that point with
    lam = 0; every other row is solved on the boundary by bisection on
    [max(0, d_max) + eps, |d_max| + sqrt(n) ||grad|| / r].

    Args:
        grads: (k, n) gradients of the loss at each input
        hessians: (k, n, n) symmetric Hessians
        r: Radius, positive
        tol: Accepted | ||delta|| - r |, defaults to 1e-8 max(1, r)
        max_iter: Bisection budget per row

    Returns:
        PerturbationBatch with one row per sample
    """
    G: np.ndarray = np.asarray(grads, dtype=float)
    H: np.ndarray = np.asarray(hessians, dtype=float)
    if r <= 0:
        raise InvalidInputError("radius must be positive")
    if G.ndim != 2 or H.shape != (G.shape[0], G.shape[1], G.shape[1]):
        raise InvalidInputError(f"mismatched shapes: grads {G.shape}, hessians {H.shape}")
    if not (np.all(np.isfinite(G)) and np.all(np.isfinite(H))):
        raise InvalidInputError("gradients and Hessians must be finite")
    if tol is None:
        tol = default_trs_tol(r)

    k, n = G.shape
    delta: np.ndarray = np.zeros((k, n))
    lam: np.ndarray = np.zeros(k)
    iterations: np.ndarray = np.zeros(k, dtype=int)
    if k == 0:
        empty: np.ndarray = np.zeros(0, dtype=bool)
        return PerturbationBatch(delta, lam, iterations, empty, empty, SolverKind.TRS)

    grad_norm: np.ndarray = np.linalg.norm(G, axis=1)
    nonzero: np.ndarray = grad_norm > SolverConfig.ZERO_GRAD_TOL

    d, Q = jacobi_eig_batch(H)
    c: np.ndarray = np.einsum("kij,ki->kj", Q, G)
    d_max: np.ndarray = d[:, 0]

    # Interior branch: strictly concave model with its maximizer inside the ball
    concave: np.ndarray = nonzero & (d_max <= -SolverConfig.CONCAVE_EIG_TOL)
    interior: np.ndarray = np.zeros(k, dtype=bool)
    if concave.any():
        safe_d: np.ndarray = np.where(concave[:, None], d, -1.0)
        newton: np.ndarray = shifted_solve_rows(Q, c, safe_d)
        interior = concave & (np.linalg.norm(newton, axis=1) <= r)
        delta[interior] = newton[interior]

    on_boundary: np.ndarray = nonzero & ~interior
    hard: np.ndarray = np.zeros(k, dtype=bool)
    if on_boundary.any():
        low: np.ndarray = lambda_lower_bound(d_max)
        high: np.ndarray = lambda_upper_bound(d_max, grad_norm, n, r)
        low_value: np.ndarray = np.full(k, -np.inf)
        low_value[on_boundary] = _secular_rows(c[on_boundary], d[on_boundary], low[on_boundary], r)

        # Root already at or below the pole guard: hard case
        hard = on_boundary & (low_value <= 0.0)
        regular: np.ndarray = on_boundary & ~hard

        if regular.any():
            rows: np.ndarray = np.flatnonzero(regular)
            lam_rows, iter_rows, converged = _bisect_rows(
                c[rows], d[rows], r, low[rows], np.maximum(high[rows], low[rows]), tol, max_iter
            )
            if not converged.all():
                failed: int = int(rows[np.flatnonzero(~converged)[0]])
                raise SolverFailureError(f"bisection did not converge in {max_iter} iterations", sample_index=failed)
            lam[rows] = lam_rows
            iterations[rows] = iter_rows
            delta[rows] = shifted_solve_rows(Q[rows], c[rows], d[rows] - lam_rows[:, None])

        if hard.any():
            rows = np.flatnonzero(hard)
            lam[rows] = low[rows]
            base: np.ndarray = shifted_solve_rows(Q[rows], c[rows], d[rows] - low[rows][:, None])
            top: np.ndarray = Q[rows][:, :, 0]
            direction: np.ndarray = np.where(np.sum(G[rows] * top, axis=1) < 0.0, -1.0, 1.0)[:, None] * top
            extend: np.ndarray = (d_max[rows] >= 0.0)[:, None]
            beta: np.ndarray = np.sum(base * direction, axis=1)
            slack: np.ndarray = np.maximum(r * r - np.sum(base * base, axis=1), 0.0)
            tau: np.ndarray = -beta + np.sqrt(beta * beta + slack)
            delta[rows] = np.where(extend, base + tau[:, None] * direction, base)

    # Bisection stops within tol of the sphere; pull any overshoot back inside
    norms: np.ndarray = np.linalg.norm(delta, axis=1)
    over: np.ndarray = norms > r
    if over.any():
        delta[over] *= (r / norms[over])[:, None]
        norms[over] = np.linalg.norm(delta[over], axis=1)

    boundary_active: np.ndarray = on_boundary & (np.abs(norms - r) <= boundary_band(r))
    return PerturbationBatch(delta, lam, iterations, boundary_active, hard, SolverKind.TRS)


def trs_solve(
    local: LossLocalModel,
    r: float,
    tol: Optional[float] = None,
    max_iter: int = SolverConfig.TRS_MAX_ITER
) -> PerturbationResult:
    """
    Trust region subproblem for one sample.

    Args:
        local: Loss, gradient and Hessian at the input
        r: Radius, positive
        tol: Accepted | ||delta|| - r |, defaults to 1e-8 max(1, r)
        max_iter: Bisection budget

    Returns:
        PerturbationResult from the TRS strategy
    """
    batch: PerturbationBatch = trs_solve_batch(
        np.asarray(local.grad, dtype=float)[None, :],
        local.hess.entries[None, :, :],
        r,
        tol=tol,
        max_iter=max_iter
    )
    return batch.result(0)


# ---------------------------------------------------------------------------
# First-order and random strategies
# ---------------------------------------------------------------------------

def project_ball(v: np.ndarray, r: float) -> np.ndarray:
    """
    Euclidean projection min(1, r / ||v||) v onto the ball of radius r.

    Args:
        v: Vector to project
        r: Radius, nonnegative

    Returns:
        np.ndarray: v itself when inside the ball, else v rescaled to norm r
    """
    v = np.asarray(v, dtype=float)
    norm: float = float(np.linalg.norm(v))
    if norm <= r:
        return v
    return v * (r / norm)


def pgd_solve(
    oracle: LossOracle,
    r: float,
    alpha: Optional[float] = None,
    max_iter: int = SolverConfig.PGD_MAX_ITER,
    stop_tol: Optional[float] = None,
    step_rule: StepRule = StepRule.NORMALIZED
) -> PerturbationResult:
    """
    Projected gradient ascent on L(x + delta) from delta = 0.

    Stops once an update moves delta by at most stop_tol or after max_iter
    updates. If the final loss is below L(x), delta = 0 is returned instead.
    The reported multiplier is the least-squares fit of grad = lam delta at
    the final iterate.

    Args:
        oracle: Loss and delta-gradient of one sample
        r: Radius, positive
        alpha: Step size, defaults to r / 4
        max_iter: Update budget
        stop_tol: Movement threshold, defaults to 1e-10 max(1, r)
        step_rule: Normalized or raw gradient steps

    Returns:
        PerturbationResult from the PGD strategy
    """
    if r <= 0:
        raise InvalidInputError("radius must be positive")
    alpha = default_pgd_alpha(r) if alpha is None else alpha
    stop_tol = default_pgd_stop_tol(r) if stop_tol is None else stop_tol
    if alpha <= 0:
        raise InvalidInputError("step size must be positive")

    delta: np.ndarray = np.zeros(oracle.n_in)
    base_loss, grad = oracle(delta)
    iterations: int = 0
    capped: bool = False

    while iterations < max_iter:
        iterations += 1
        if not np.all(np.isfinite(grad)):
            raise SolverFailureError(f"non-finite gradient at PGD iteration {iterations}")
        if step_rule is StepRule.NORMALIZED:
            grad_norm: float = float(np.linalg.norm(grad))
            step: np.ndarray = alpha * grad / grad_norm if grad_norm > 0.0 else np.zeros_like(grad)
        else:
            step = alpha * grad
        candidate: np.ndarray = project_ball(delta + step, r)
        moved: float = float(np.linalg.norm(candidate - delta))
        delta = candidate
        _, grad = oracle(delta)
        if moved <= stop_tol:
            break
    else:
        capped = max_iter > 1

    final_loss, final_grad = oracle(delta)
    if final_loss < base_loss:
        delta = np.zeros(oracle.n_in)
        final_grad = grad

    norm: float = float(np.linalg.norm(delta))
    boundary_active: bool = abs(norm - r) <= boundary_band(r)
    lam: float = max(0.0, float(final_grad @ delta) / (norm * norm)) if boundary_active and norm > 0.0 else 0.0
    return PerturbationResult(
        delta=delta,
        lam=lam,
        delta_norm=norm,
        boundary_active=boundary_active,
        iterations=iterations,
        solver=SolverKind.PGD,
        flagged=capped
    )


def _project_rows(V: np.ndarray, r: float) -> np.ndarray:
    """project_ball applied to every row of V."""
    norms: np.ndarray = np.linalg.norm(V, axis=1)
    outside: np.ndarray = norms > r
    scale: np.ndarray = np.divide(r, norms, out=np.ones_like(norms), where=outside)
    return np.where(outside[:, None], V * scale[:, None], V)


def pgd_solve_batch(
    model: AffineModel,
    X: np.ndarray,
    y: np.ndarray,
    r: float,
    alpha: Optional[float] = None,
    max_iter: int = SolverConfig.PGD_MAX_ITER,
    stop_tol: Optional[float] = None,
    step_rule: StepRule = StepRule.NORMALIZED
) -> PerturbationBatch:
    """
    Projected gradient ascent for a batch of samples of the affine/BCE model.

    Rows iterate in lockstep. A row freezes once an update moves it by at
    most stop_tol, so each row follows the iteration of pgd_solve on its own
    sample, including the final comparison with delta = 0 and the fitted
    multiplier.

    Args:
        model: Affine model at the current weights
        X: (k, n) inputs
        y: (k,) labels in {0, 1}
        r: Radius, positive
        alpha: Step size, defaults to r / 4
        max_iter: Update budget per row
        stop_tol: Movement threshold, defaults to 1e-10 max(1, r)
        step_rule: Normalized or raw gradient steps

    Returns:
        PerturbationBatch with one row per sample, flagged where the budget ran out
    """
    if r <= 0:
        raise InvalidInputError("radius must be positive")
    alpha = default_pgd_alpha(r) if alpha is None else alpha
    stop_tol = default_pgd_stop_tol(r) if stop_tol is None else stop_tol
    if alpha <= 0:
        raise InvalidInputError("step size must be positive")

    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    k, n = X.shape
    w: np.ndarray = model.w[None, :]

    z: np.ndarray = logits_batch(model, X)
    base_loss: np.ndarray = bce_from_logit(z, y)
    grad: np.ndarray = (sigmoid(z) - y)[:, None] * w
    delta: np.ndarray = np.zeros((k, n))
    iterations: np.ndarray = np.zeros(k, dtype=int)
    active: np.ndarray = np.ones(k, dtype=bool)

    for _ in range(max_iter):
        if not active.any():
            break
        broken: np.ndarray = active & ~np.all(np.isfinite(grad), axis=1)
        if broken.any():
            row: int = int(np.flatnonzero(broken)[0])
            raise SolverFailureError(
                f"non-finite gradient at PGD iteration {iterations[row] + 1}", sample_index=row
            )
        iterations += active
        if step_rule is StepRule.NORMALIZED:
            grad_norm: np.ndarray = np.linalg.norm(grad, axis=1)[:, None]
            step: np.ndarray = np.divide(alpha * grad, grad_norm, out=np.zeros_like(grad), where=grad_norm > 0.0)
        else:
            step = alpha * grad
        candidate: np.ndarray = _project_rows(delta + step, r)
        moved: np.ndarray = np.linalg.norm(candidate - delta, axis=1)
        delta = np.where(active[:, None], candidate, delta)
        grad = (sigmoid(logits_batch(model, X + delta)) - y)[:, None] * w
        active &= moved > stop_tol

    capped: np.ndarray = active & (max_iter > 1)

    z = logits_batch(model, X + delta)
    worse: np.ndarray = bce_from_logit(z, y) < base_loss
    delta[worse] = 0.0
    final_grad: np.ndarray = (sigmoid(z) - y)[:, None] * w

    norms: np.ndarray = np.linalg.norm(delta, axis=1)
    boundary_active: np.ndarray = (np.abs(norms - r) <= boundary_band(r)) & ~worse
    fitted: np.ndarray = np.divide(
        np.sum(final_grad * delta, axis=1), norms * norms, out=np.zeros(k), where=boundary_active & (norms > 0.0)
    )
    return PerturbationBatch(delta, np.maximum(0.0, fitted), iterations, boundary_active, capped, SolverKind.PGD)


def random_perturb(rng: np.random.Generator, n: int, r: float) -> PerturbationResult:
    """
    Standard normal direction rescaled to norm r.

    Args:
        rng: Seeded generator, advanced by one draw (more only on a zero sample)
        n: Dimension
        r: Radius, nonnegative

    Returns:
        PerturbationResult from the RANDOM strategy
    """
    if n < 1 or r < 0:
        raise InvalidInputError("dimension must be positive and radius nonnegative")
    if r == 0:
        return PerturbationResult(np.zeros(n), 0.0, 0.0, False, 0, SolverKind.RANDOM)

    sample: np.ndarray = rng.standard_normal(n)
    norm: float = float(np.linalg.norm(sample))
    while norm == 0.0:
        sample = rng.standard_normal(n)
        norm = float(np.linalg.norm(sample))
    delta: np.ndarray = sample * (r / norm)
    return PerturbationResult(delta, 0.0, float(np.linalg.norm(delta)), True, 0, SolverKind.RANDOM)


def random_perturb_batch(rng: np.random.Generator, k: int, n: int, r: float) -> np.ndarray:
    """(k, n) block of random perturbations; row i belongs to sample i."""
    if r == 0:
        return np.zeros((k, n))
    sample: np.ndarray = rng.standard_normal((k, n))
    norms: np.ndarray = np.linalg.norm(sample, axis=1)
    for i in np.flatnonzero(norms == 0.0):
        while norms[i] == 0.0:
            sample[i] = rng.standard_normal(n)
            norms[i] = np.linalg.norm(sample[i])
    return sample * (r / norms)[:, None]


# ---------------------------------------------------------------------------
# Optimality checks and the affine closed form
# ---------------------------------------------------------------------------

def kkt_residual(grad_at_perturbed: np.ndarray, delta: np.ndarray, lam: float, r: float) -> KktResiduals:
    """
    Violations of stationarity, primal and dual feasibility, complementarity.

    Args:
        grad_at_perturbed: Gradient of the loss at x + delta
        delta: The perturbation
        lam: Its multiplier
        r: Radius

    Returns:
        KktResiduals, all nonnegative
    """
    grad_at_perturbed = np.asarray(grad_at_perturbed, dtype=float)
    delta = np.asarray(delta, dtype=float)
    if grad_at_perturbed.shape != delta.shape:
        raise InvalidInputError(f"shape mismatch: {grad_at_perturbed.shape} vs {delta.shape}")
    norm: float = float(np.linalg.norm(delta))
    return KktResiduals(
        stationarity=float(np.linalg.norm(-grad_at_perturbed + lam * delta)),
        primal=max(0.0, norm - r),
        dual=max(0.0, -lam),
        complementarity=abs(lam * (norm - r))
    )


def exact_affine_perturbation(m: AffineModel, x: np.ndarray, y: int, r: float) -> tuple[np.ndarray, float]:
    """
    Closed-form inner maximizer of the affine/BCE loss.

    The loss is monotone in w^T delta, so the maximizer is
    sign(sigma(z) - y) r w / ||w|| with multiplier
    sigma'(z) ||w||^2 + |sigma(z) - y| ||w|| / r for the quadratic model.

    Returns:
        tuple: (delta, lam)
    """
    x = np.asarray(x, dtype=float)
    z: float = float(m.w @ x + m.b)
    residual: float = float(sigmoid(z)) - y
    w_norm: float = float(np.linalg.norm(m.w))
    if w_norm == 0.0 or residual == 0.0:
        return np.zeros(m.n_in), 0.0
    delta: np.ndarray = np.sign(residual) * r * m.w / w_norm
    lam: float = float(sigmoid_prime(z)) * w_norm ** 2 + abs(residual) * w_norm / r
    return delta, lam
