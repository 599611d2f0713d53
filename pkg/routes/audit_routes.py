"""
Audit Routes - API endpoints for fairness audits and single inner solves.

This module provides FastAPI routes for the health check, fairness audits of
precomputed predictions and a single-sample inner-maximization solve.
Service errors propagate to the RobustFairError handler in app.py.
"""

from typing import Optional

import numpy as np
from fastapi import APIRouter, Depends, Header, HTTPException, status

from config import APIConfig, __version__, debug_info, debug_warning
from models.schemas import (
    AuditRequest,
    AuditResponse,
    HealthResponse,
    InnerSolveRequest,
    InnerSolveResponse,
    KktResponse,
    SolverKind,
)
from services.fairness_service import gap_to_float, report_from_counts, tally
from services.model_service import AffineModel, bce_loss, loss_local_model
from services.solver_service import (
    AffineLossOracle,
    PerturbationResult,
    exact_affine_perturbation,
    kkt_residual,
    pgd_solve,
    random_perturb,
    trs_solve,
)


router = APIRouter(tags=["Audit"])


def verify_api_key(x_api_key: Optional[str] = Header(None)) -> Optional[str]:
    """
    Verify API key from header when ROBUSTFAIR_API_KEY is set.

    Args:
        x_api_key: API key from X-API-Key header

    Returns:
        The validated API key, or None when no key is configured

    Raises:
        HTTPException: If API key is missing or invalid
    """
    if not APIConfig.API_KEY:
        return None

    if x_api_key is None:
        debug_warning("[API] Missing API key")
        raise HTTPException(
            status_code=status.HTTP_401_UNAUTHORIZED,
            detail="Missing API key. Provide X-API-Key header."
        )

    if x_api_key != APIConfig.API_KEY:
        debug_warning(f"[API] Invalid API key: {x_api_key[:8] if x_api_key else '(empty)'}...")
        raise HTTPException(
            status_code=status.HTTP_403_FORBIDDEN,
            detail="Invalid API key"
        )

    return x_api_key


@router.get("/health", response_model=HealthResponse)
async def health_check() -> HealthResponse:
    """
    Health check endpoint.

    Returns:
        HealthResponse with API status
    """
    return HealthResponse(status="healthy", version=__version__)


@router.post("/audit", response_model=AuditResponse)
async def audit(request: AuditRequest, _: Optional[str] = Depends(verify_api_key)) -> AuditResponse:
    """
    Fairness gaps of binary predictions.

    Args:
        request: Predictions, labels, sensitive attribute, strict flag

    Returns:
        AuditResponse with gaps (null where undefined) and group counts
    """
    counts = tally(request.preds, request.labels, request.sensitive)
    report = report_from_counts(counts, strict=request.strict)

    debug_info(f"[API] Audited {counts.total} predictions")
    return AuditResponse(
        independence=gap_to_float(report.independence),
        separation_y0=gap_to_float(report.separation_y0),
        separation_y1=gap_to_float(report.separation_y1),
        sufficiency_yhat0=gap_to_float(report.sufficiency_yhat0),
        sufficiency_yhat1=gap_to_float(report.sufficiency_yhat1),
        counts=counts.as_dict(),
        total=counts.total
    )


@router.post("/inner-solve", response_model=InnerSolveResponse)
async def inner_solve(request: InnerSolveRequest, _: Optional[str] = Depends(verify_api_key)) -> InnerSolveResponse:
    """
    Worst-case perturbation of one sample under an affine model.

    Args:
        request: Model, sample, radius and solver

    Returns:
        InnerSolveResponse with the closed-form reference and KKT residuals
    """
    x: np.ndarray = np.asarray(request.x, dtype=float)
    model = AffineModel(np.asarray(request.w, dtype=float), request.b)
    if request.solver is SolverKind.TRS:
        result: PerturbationResult = trs_solve(loss_local_model(model, x, request.y), request.radius)
    elif request.solver is SolverKind.PGD:
        result = pgd_solve(AffineLossOracle(model, x, request.y), request.radius)
    else:
        result = random_perturb(np.random.default_rng(request.seed), model.n_in, request.radius)
    if result.flagged:
        debug_warning(f"[API] {result.solver.value} solve flagged after {result.iterations} iterations")
    perturbed: np.ndarray = result.apply(x)
    perturbed_local = loss_local_model(model, perturbed, request.y)
    kkt = kkt_residual(perturbed_local.grad, result.delta, result.lam, request.radius)
    exact_delta, exact_lam = exact_affine_perturbation(model, x, request.y, request.radius)
    loss: float = bce_loss(model, x, request.y)

    return InnerSolveResponse(
        solver=result.solver,
        delta=result.delta.tolist(),
        perturbed=perturbed.tolist(),
        lam=result.lam,
        delta_norm=result.delta_norm,
        boundary_active=result.boundary_active,
        iterations=result.iterations,
        loss=loss,
        perturbed_loss=perturbed_local.value,
        exact_delta=exact_delta.tolist(),
        exact_lam=exact_lam,
        kkt=KktResponse(
            stationarity=kkt.stationarity,
            primal=kkt.primal,
            dual=kkt.dual,
            complementarity=kkt.complementarity
        )
    )
