"""HTTP front end: FastAPI routes over the operation handlers.

Domain errors map to 400, tolerance failures to 422 with a machine-readable
`kind` so the CLI client can translate them back into exit codes.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import DomainError, ToleranceError
from . import models, ops


def create_app() -> FastAPI:
    app = FastAPI(
        title="toric-kstab",
        description="Toric K-stability scans and critical Killing potentials",
    )

    @app.exception_handler(DomainError)
    async def _domain(request: Request, exc: DomainError):
        return JSONResponse(status_code=400, content={"kind": "domain", "message": str(exc)})

    @app.exception_handler(ToleranceError)
    async def _tolerance(request: Request, exc: ToleranceError):
        return JSONResponse(
            status_code=422, content={"kind": "tolerance", "message": str(exc)}
        )

    @app.get("/health", response_model=models.HealthResponse)
    async def health() -> models.HealthResponse:
        return models.HealthResponse()

    @app.get("/alpha", response_model=models.AlphaResponse)
    async def alpha() -> models.AlphaResponse:
        return ops.alpha()

    @app.post("/polytope/info", response_model=models.PolytopeInfoResponse)
    async def polytope_info(req: models.PolytopeInfoRequest) -> models.PolytopeInfoResponse:
        return ops.polytope_info(req)

    @app.post("/functionals/futaki", response_model=models.FutakiResponse)
    async def futaki(req: models.FutakiRequest) -> models.FutakiResponse:
        return ops.futaki_report(req)

    @app.post("/critical-rays", response_model=models.CriticalRaysResponse)
    async def critical(req: models.CriticalRaysRequest) -> models.CriticalRaysResponse:
        return ops.critical_rays(req)

    @app.post("/df-scan", response_model=models.DfScanResponse)
    async def df_scan(req: models.DfScanRequest) -> models.DfScanResponse:
        return ops.df_scan_report(req)

    @app.post("/verify", response_model=models.VerifyResponse)
    async def verify(req: models.VerifyRequest) -> models.VerifyResponse:
        return ops.verify(req)

    return app


app = create_app()
