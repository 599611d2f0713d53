"""
Robust Fairness API - FastAPI Backend

Fairness audits of binary predictions and single-sample inner solves
over HTTP. Service errors map to status codes here, in one place:
validation problems become 422, solver failures 500.

Usage:
    Local: uvicorn app:app --reload --port 8000
"""

from collections.abc import AsyncGenerator
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request, status
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from config import APIConfig, SolverConfig, debug_error, debug_info, debug_warning
from models.errors import RobustFairError, RunStatus
from routes.audit_routes import router as audit_router

HTTP_STATUS: dict[RunStatus, int] = {
    RunStatus.VALIDATION_ERROR: 422,
    RunStatus.SOLVER_FAILURE: status.HTTP_500_INTERNAL_SERVER_ERROR,
}


@asynccontextmanager
async def lifespan(app: FastAPI) -> AsyncGenerator[None, None]:
    """
    Log the API configuration once at startup.

    Args:
        app (FastAPI): The FastAPI application instance.

    Yields:
        None
    """
    debug_info(f"[API] Robust Fairness API {APIConfig.VERSION} started")
    debug_info(f"[API] Authentication {'enabled' if APIConfig.API_KEY else 'disabled'}")
    debug_info(
        f"[API] TRS max_iter={SolverConfig.TRS_MAX_ITER}, PGD max_iter={SolverConfig.PGD_MAX_ITER}"
    )
    yield


app = FastAPI(
    title="Robust Fairness API",
    description="Fairness gaps and adversarial inner solves for affine classifiers",
    version=APIConfig.VERSION,
    docs_url="/docs",
    redoc_url="/redoc",
    lifespan=lifespan
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=APIConfig.ALLOWED_ORIGINS,
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(audit_router, prefix="/api")


@app.get("/")
async def root() -> dict[str, object]:
    """
    Service name, version and the available endpoints.

    Returns:
        dict: API summary
    """
    return {
        "message": "Robust Fairness API",
        "version": APIConfig.VERSION,
        "docs": "/docs",
        "endpoints": [route.path for route in audit_router.routes],
    }


@app.exception_handler(RobustFairError)
async def robust_fair_error_handler(request: Request, exc: RobustFairError) -> JSONResponse:
    """
    Translate a service error into a JSON error body.

    Args:
        request: The incoming request
        exc: The service error

    Returns:
        JSONResponse with 422 for validation errors and 500 for solver failures
    """
    code: int = HTTP_STATUS.get(exc.status, status.HTTP_500_INTERNAL_SERVER_ERROR)
    log = debug_warning if code < 500 else debug_error
    log(f"[API] {request.url.path} -> {code} ({exc.status.name}): {exc}")
    return JSONResponse(
        status_code=code,
        content={"status": "error", "code": exc.status.name, "detail": str(exc)}
    )


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception) -> JSONResponse:
    """
    Last-resort handler for unexpected errors.

    Args:
        request: The incoming request
        exc: The exception that was raised

    Returns:
        JSONResponse with error details in debug mode
    """
    debug_error(f"[API] Unhandled error on {request.url.path}: {exc}")
    return JSONResponse(
        status_code=status.HTTP_500_INTERNAL_SERVER_ERROR,
        content={
            "status": "error",
            "message": "Internal server error",
            "detail": str(exc) if APIConfig.IS_DEBUG_MODE else None
        }
    )


if __name__ == "__main__":
    import uvicorn
    uvicorn.run("app:app", host="0.0.0.0", port=8000, reload=True)
