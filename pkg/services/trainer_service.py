"""
Trainer Service - Adversarially robust gradient descent.

The outer loop minimizes the mean BCE of perturbed samples over (w, b). Each
batch first solves the inner problem for every sample at the current
weights, then takes one gradient step with the perturbations held fixed.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, TypeVar

import numpy as np

from config import TrainDefaults, debug_info, debug_warning
from models.errors import DivergenceError, InvalidInputError, SolverFailureError
from models.schemas import SolverKind, TrainConfig
from services.data_service import TabularDataset
from services.model_service import (
    AffineModel,
    bce_from_logit,
    local_model_batch,
    logits_batch,
    mean_grad_params_batch,
    sigmoid,
)
from services.solver_service import (
    PerturbationBatch,
    pgd_solve_batch,
    random_perturb_batch,
    trs_solve_batch,
)

T = TypeVar("T")

FLAG_MEANING: dict[SolverKind, str] = {
    SolverKind.TRS: "hard-case branch",
    SolverKind.PGD: "iteration cap reached",
}


@dataclass
class TrainHistory:
    """
    Per-epoch training diagnostics.

    Attributes:
        loss: Mean clean loss, at the weights each batch was solved with
        perturbed_loss: Mean loss at x + delta, same weights
        epoch_time: Wall-clock seconds of inner solves, gradients and updates
        kkt_stationarity: Mean ||-grad(x + delta) + lam delta|| (TRS only, else None)
        flagged: Samples per epoch that took the TRS hard case or exhausted the PGD budget
    """
    loss: list[float] = field(default_factory=list)
    perturbed_loss: list[float] = field(default_factory=list)
    epoch_time: list[float] = field(default_factory=list)
    kkt_stationarity: list[Optional[float]] = field(default_factory=list)
    flagged: list[int] = field(default_factory=list)

    @property
    def mean_epoch_time(self) -> float:
        return float(np.mean(self.epoch_time)) if self.epoch_time else 0.0


@dataclass(frozen=True)
class TimingRow:
    solver: SolverKind
    radius: float
    mean_epoch_time: float


@dataclass(frozen=True)
class TimingTable:
    """
    Mean epoch times per (solver, radius) and the PGD/TRS ratio per radius.

    Attributes:
        rows: One row per (solver, radius), radius-major
        ratios: radius -> PGD time / TRS time, when both were timed
    """
    rows: list[TimingRow]
    ratios: dict[float, float]

    def time_of(self, solver: SolverKind, radius: float) -> float:
        for row in self.rows:
            if row.solver is solver and row.radius == radius:
                return row.mean_epoch_time
        raise KeyError((solver, radius))

    @property
    def min_ratio(self) -> Optional[tuple[float, float]]:
        """(radius, ratio) with the smallest PGD/TRS ratio."""
        if not self.ratios:
            return None
        return min(self.ratios.items(), key=lambda item: item[1])

    @property
    def max_ratio(self) -> Optional[tuple[float, float]]:
        if not self.ratios:
            return None
        return max(self.ratios.items(), key=lambda item: item[1])


# ---------------------------------------------------------------------------
# Inner solves
# ---------------------------------------------------------------------------

def _chunked(fn: Callable[[int, int], T], n_rows: int, threads: int) -> list[T]:
    """Run fn(start, stop) over contiguous chunks, in chunk order."""
    if threads <= 1 or n_rows <= 1:
        return [fn(0, n_rows)]
    bounds: list[np.ndarray] = np.array_split(np.arange(n_rows), min(threads, n_rows))
    with ThreadPoolExecutor(max_workers=threads) as executor:
        futures = [executor.submit(fn, int(chunk[0]), int(chunk[-1]) + 1) for chunk in bounds]
        return [future.result() for future in futures]


def _perturb(model: AffineModel, X: np.ndarray, y: np.ndarray, cfg: TrainConfig) -> PerturbationBatch:
    """TRS or PGD perturbations of a batch, solved over contiguous worker chunks."""
    def solve(start: int, stop: int) -> PerturbationBatch:
        Xc: np.ndarray = X[start:stop]
        yc: np.ndarray = y[start:stop]
        try:
            if cfg.solver is SolverKind.TRS:
                grads, hessians = local_model_batch(model, Xc, yc)
                return trs_solve_batch(grads, hessians, cfg.radius, tol=cfg.trs.tol, max_iter=cfg.trs.max_iter)
            return pgd_solve_batch(
                model,
                Xc,
                yc,
                cfg.radius,
                alpha=cfg.pgd.alpha,
                max_iter=cfg.pgd.max_iter,
                stop_tol=cfg.pgd.stop_tol,
                step_rule=cfg.pgd.step_rule
            )
        except SolverFailureError as e:
            raise e.at_offset(start) from e

    parts: list[PerturbationBatch] = _chunked(solve, X.shape[0], cfg.threads)
    if len(parts) == 1:
        return parts[0]
    return PerturbationBatch(
        delta=np.vstack([p.delta for p in parts]),
        lam=np.concatenate([p.lam for p in parts]),
        iterations=np.concatenate([p.iterations for p in parts]),
        boundary_active=np.concatenate([p.boundary_active for p in parts]),
        flagged=np.concatenate([p.flagged for p in parts]),
        solver=parts[0].solver
    )


def _batch_bounds(m: int, batch_size: Optional[int]) -> list[tuple[int, int]]:
    size: int = m if batch_size is None else batch_size
    return [(start, min(start + size, m)) for start in range(0, m, size)]


# ---------------------------------------------------------------------------
# Training and evaluation
# ---------------------------------------------------------------------------

def train(train_set: TabularDataset, cfg: TrainConfig) -> tuple[AffineModel, TrainHistory]:
    """
    Train an affine classifier against worst-case perturbations of radius r.

    Weights start at zero. With solver NONE (or radius 0) this is plain
    gradient descent on the logistic loss.

    Args:
        train_set: Training data
        cfg: Training configuration

    Returns:
        tuple: (trained model, per-epoch history)
    """
    X: np.ndarray = train_set.X
    y: np.ndarray = train_set.y
    m, n = X.shape
    robust: bool = cfg.solver is not SolverKind.NONE and cfg.radius > 0.0
    model: AffineModel = AffineModel.zeros(n)
    history = TrainHistory()
    bounds: list[tuple[int, int]] = _batch_bounds(m, cfg.batch_size)

    debug_info(
        f"[Trainer] {cfg.solver.value} r={cfg.radius} lr={cfg.learning_rate} "
        f"epochs={cfg.epochs} m={m} batches={len(bounds)}"
    )

    for epoch in range(cfg.epochs):
        elapsed: float = 0.0
        clean_sum: float = 0.0
        perturbed_sum: float = 0.0
        kkt_sum: float = 0.0
        flagged: int = 0

        random_block: Optional[np.ndarray] = None
        if robust and cfg.solver is SolverKind.RANDOM:
            tic: float = time.perf_counter()
            random_block = random_perturb_batch(np.random.default_rng([cfg.seed, epoch]), m, n, cfg.radius)
            elapsed += time.perf_counter() - tic

        for start, stop in bounds:
            Xb: np.ndarray = X[start:stop]
            yb: np.ndarray = y[start:stop]
            lam: Optional[np.ndarray] = None

            tic = time.perf_counter()
            try:
                if not robust:
                    delta: np.ndarray = np.zeros_like(Xb)
                elif cfg.solver is SolverKind.RANDOM:
                    delta = random_block[start:stop]
                else:
                    batch: PerturbationBatch = _perturb(model, Xb, yb, cfg)
                    delta = batch.delta
                    flagged += int(np.count_nonzero(batch.flagged))
                    if cfg.solver is SolverKind.TRS:
                        lam = batch.lam
            except SolverFailureError as e:
                raise e.at_offset(start) from e
            grad_w, grad_b = mean_grad_params_batch(model, Xb + delta, yb)
            new_w: np.ndarray = model.w - cfg.learning_rate * (grad_w + cfg.l2_coeff * model.w)
            new_b: float = model.b - cfg.learning_rate * grad_b
            elapsed += time.perf_counter() - tic

            # Diagnostics at the weights the batch was solved with
            clean: np.ndarray = bce_from_logit(logits_batch(model, Xb), yb)
            z_pert: np.ndarray = logits_batch(model, Xb + delta)
            clean_sum += float(np.sum(clean))
            perturbed_sum += float(np.sum(bce_from_logit(z_pert, yb)))
            if lam is not None:
                true_grad: np.ndarray = (sigmoid(z_pert) - yb)[:, None] * model.w[None, :]
                kkt_sum += float(np.sum(np.linalg.norm(-true_grad + lam[:, None] * delta, axis=1)))

            if not (np.isfinite(clean_sum) and np.isfinite(perturbed_sum)):
                raise DivergenceError(epoch)
            if not (np.all(np.isfinite(new_w)) and np.isfinite(new_b)):
                raise DivergenceError(epoch, "non-finite model parameters")
            model = AffineModel(new_w, new_b)

        history.loss.append(clean_sum / m)
        history.perturbed_loss.append(perturbed_sum / m)
        history.epoch_time.append(elapsed)
        history.kkt_stationarity.append(kkt_sum / m if robust and cfg.solver is SolverKind.TRS else None)
        history.flagged.append(flagged)
        if flagged:
            debug_warning(
                f"[Trainer] epoch {epoch + 1}: {flagged} of {m} {cfg.solver.value} solves flagged "
                f"({FLAG_MEANING[cfg.solver]})"
            )
        debug_info(
            f"[Trainer] epoch {epoch + 1}/{cfg.epochs} loss={history.loss[-1]:.6f} "
            f"perturbed={history.perturbed_loss[-1]:.6f} time={elapsed:.4f}s"
        )

    return model, history


def predict(m: AffineModel, X: np.ndarray, threshold: float = TrainDefaults.THRESHOLD) -> np.ndarray:
    """
    Binary predictions, 1 iff sigma(w^T x + b) >= threshold.

    The comparison is done on the logit scale, so sigma = 0.5 at threshold
    0.5 predicts 1 exactly.
    """
    if not 0.0 < threshold < 1.0:
        raise InvalidInputError(f"threshold must lie in (0, 1), got {threshold}")
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != m.n_in:
        raise InvalidInputError(f"expected (k, {m.n_in}) inputs, got shape {X.shape}")
    cutoff: float = float(np.log(threshold) - np.log1p(-threshold))
    return (logits_batch(m, X) >= cutoff).astype(int)


def evaluate(m: AffineModel, d: TabularDataset, threshold: float = TrainDefaults.THRESHOLD) -> tuple[float, np.ndarray]:
    """
    Accuracy and predictions of a model on a dataset.

    Args:
        m: Trained model
        d: Dataset with matching feature count
        threshold: Probability cutoff for class 1

    Returns:
        tuple: (accuracy in [0, 1], binary predictions)
    """
    preds: np.ndarray = predict(m, d.X, threshold)
    correct: int = int(np.sum(preds == d.y))
    return float(Fraction(correct, d.m)), preds


def benchmark_epochs(
    train_set: TabularDataset,
    radii: Sequence[float],
    solvers: Sequence[SolverKind],
    cfg: TrainConfig
) -> TimingTable:
    """
    Mean epoch time of every (solver, radius) pair, single-threaded.

    Solver NONE is always trained at radius 0 but reported under each radius.

    Args:
        train_set: Training data, built before timing starts
        radii: Radii to time
        solvers: Strategies to time
        cfg: Base configuration; radius, solver and threads are overridden

    Returns:
        TimingTable with PGD/TRS ratios where both were timed
    """
    if not radii or not solvers:
        raise InvalidInputError("at least one radius and one solver are required")

    rows: list[TimingRow] = []
    ratios: dict[float, float] = {}
    for radius in radii:
        for solver in solvers:
            cell: TrainConfig = cfg.model_copy(update={
                "radius": 0.0 if solver is SolverKind.NONE else radius,
                "solver": solver,
                "threads": 1,
            })
            _, history = train(train_set, cell)
            rows.append(TimingRow(solver, radius, history.mean_epoch_time))
            debug_info(f"[Bench] {solver.value} r={radius}: {history.mean_epoch_time:.6f}s/epoch")

        timed: dict[SolverKind, float] = {row.solver: row.mean_epoch_time for row in rows if row.radius == radius}
        if SolverKind.PGD in timed and SolverKind.TRS in timed and timed[SolverKind.TRS] > 0.0:
            ratios[radius] = timed[SolverKind.PGD] / timed[SolverKind.TRS]

    return TimingTable(rows=rows, ratios=ratios)
