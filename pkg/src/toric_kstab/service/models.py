"""Request/response schemas for the stability service.

Every operation the CLI exposes is a (request model, response model) pair so
the in-process and HTTP paths serialize identically.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, model_validator

from .. import __version__


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str = __version__


class AlphaResponse(BaseModel):
    """Root of x^4 - 4x^3 + 16x^2 - 16x + 4 in (0, 1)."""

    root: float
    residual: float
    runtime_ms: float


class PolytopeSpec(BaseModel):
    """Either explicit vertices or the standard one-parameter quadrilateral."""

    vertices: list[tuple[float, float]] | None = None
    p: float | None = None

    @model_validator(mode="after")
    def _exactly_one_source(self):
        if (self.vertices is None) == (self.p is None):
            raise ValueError("give exactly one of `vertices` or `p`")
        return self


class AffineCoeffs(BaseModel):
    """f(x, y) = a x + b y + c."""

    a: float
    b: float
    c: float


class PolytopeInfoRequest(BaseModel):
    polytope: PolytopeSpec


class PolytopeInfoResponse(BaseModel):
    vertices: list[tuple[float, float]]
    is_delzant: bool
    area: float
    centroid: tuple[float, float]
    lattice_perimeter: float
    edge_lattice_lengths: list[float]


class FutakiRequest(BaseModel):
    polytope: PolytopeSpec
    f: AffineCoeffs
    n: float = 4.0
    sigma: Literal["lattice", "euclidean"] = "lattice"


class FutakiResponse(BaseModel):
    """Futaki invariant on the affine basis plus the derived constants."""

    fut_1: float
    fut_mu1: float
    fut_mu2: float
    c_const: float
    d_const: float
    eh: float
    vol: float
    n: float


class CriticalRaysRequest(BaseModel):
    p: float
    n: float = 4.0
    multistart: int = Field(default=200, ge=8, le=2000)


class CriticalRayModel(BaseModel):
    f: AffineCoeffs
    eh: float
    grad_norm: float
    futaki_residuals: tuple[float, float, float]
    cd_gap: float
    classification: str


class FamilyMatchModel(BaseModel):
    branch: str
    coefficients: AffineCoeffs
    matched_ray: int | None
    angular_distance: float | None
    sign_flipped: bool | None


class CriticalRaysResponse(BaseModel):
    p: float
    n: float
    rays: list[CriticalRayModel]
    family_matches: list[FamilyMatchModel]
    runtime_s: float


class DfScanRequest(BaseModel):
    polytope: PolytopeSpec
    n: float = 4.0
    branch: str | None = None
    f: AffineCoeffs | None = None
    grid: int = Field(default=33, ge=2, le=257)
    threads: int = Field(default=1, ge=1, le=64)

    @model_validator(mode="after")
    def _resolvable_potential(self):
        if (self.branch is None) == (self.f is None):
            raise ValueError("give exactly one of `branch` or `f`")
        if self.branch is not None and self.polytope.p is None:
            raise ValueError("closed-form branches need the one-parameter polytope (`p`)")
        return self


class DfScanResponse(BaseModel):
    report: dict
    csv: str
    runtime_s: float


class VerifyRequest(BaseModel):
    suite: str


class CheckModel(BaseModel):
    name: str
    passed: bool
    worst: float
    tol: float
    detail: str


class VerifyResponse(BaseModel):
    suite: str
    checks: list[CheckModel]
    all_passed: bool
