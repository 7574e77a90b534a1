"""Operation handlers: one function per service route.

The CLI calls these directly in process; the HTTP app wraps the same
functions, so both front ends produce identical payloads.
"""

from __future__ import annotations

import time

from ..criticalpoints import (
    SearchConfig,
    closed_form_family,
    find_critical_rays,
    match_families,
    quartic_alpha,
    quartic_value,
)
from ..errors import DomainError
from ..functionals import FunctionalContext, c_const, d_const, eh, futaki, vol
from ..kstability import scan_csv_text, stability_verdict, verdict_report
from ..polytope import AffineFn2, Polytope2, from_vertices, delta_p
from ..suites import run_suite
from . import models


def _build_polytope(spec: models.PolytopeSpec) -> Polytope2:
    if spec.p is not None:
        return delta_p(spec.p)
    return from_vertices(spec.vertices)


def _build_affine(c: models.AffineCoeffs) -> AffineFn2:
    return AffineFn2(c.a, c.b, c.c)


def alpha() -> models.AlphaResponse:
    t0 = time.perf_counter()
    root = quartic_alpha()
    dt = (time.perf_counter() - t0) * 1e3
    return models.AlphaResponse(root=root, residual=quartic_value(root), runtime_ms=dt)


def polytope_info(req: models.PolytopeInfoRequest) -> models.PolytopeInfoResponse:
    poly = _build_polytope(req.polytope)
    return models.PolytopeInfoResponse(
        vertices=[(float(x), float(y)) for x, y in poly.vertices],
        is_delzant=poly.is_delzant,
        area=poly.area,
        centroid=tuple(map(float, poly.centroid)),
        lattice_perimeter=poly.lattice_perimeter,
        edge_lattice_lengths=[e.lattice_length for e in poly.edges],
    )


def futaki_report(req: models.FutakiRequest) -> models.FutakiResponse:
    ctx = FunctionalContext(
        _build_polytope(req.polytope), _build_affine(req.f), req.n, sigma=req.sigma
    )
    return models.FutakiResponse(
        fut_1=futaki(ctx, AffineFn2(0, 0, 1)),
        fut_mu1=futaki(ctx, AffineFn2(1, 0, 0)),
        fut_mu2=futaki(ctx, AffineFn2(0, 1, 0)),
        c_const=c_const(ctx),
        d_const=d_const(ctx),
        eh=eh(ctx),
        vol=vol(ctx),
        n=req.n,
    )


def critical_rays(req: models.CriticalRaysRequest) -> models.CriticalRaysResponse:
    t0 = time.perf_counter()
    poly = delta_p(req.p)
    rays = find_critical_rays(poly, req.n, SearchConfig(multistart=req.multistart))
    matches = match_families(req.p, rays, req.n)
    return models.CriticalRaysResponse(
        p=req.p,
        n=req.n,
        rays=[
            models.CriticalRayModel(
                f=models.AffineCoeffs(a=r.f.a, b=r.f.b, c=r.f.c),
                eh=r.eh,
                grad_norm=r.grad_norm,
                futaki_residuals=tuple(r.futaki_residuals),
                cd_gap=r.cd_gap,
                classification=r.classification,
            )
            for r in rays
        ],
        family_matches=[
            models.FamilyMatchModel(
                branch=m["branch"],
                coefficients=models.AffineCoeffs(
                    a=m["coefficients"][0], b=m["coefficients"][1], c=m["coefficients"][2]
                ),
                matched_ray=m["matched_ray"],
                angular_distance=m["angular_distance"],
                sign_flipped=m["sign_flipped"],
            )
            for m in matches
        ],
        runtime_s=time.perf_counter() - t0,
    )


def resolve_scan_potential(req: models.DfScanRequest) -> AffineFn2:
    if req.f is not None:
        return _build_affine(req.f)
    f = closed_form_family(req.polytope.p, req.branch)
    # printed family triples may be negative on the polytope; the functional
    # needs the positive representative of the ray
    poly = delta_p(req.polytope.p)
    if f.min_on(poly) <= 0.0:
        flipped = -f
        if flipped.min_on(poly) <= 0.0:
            raise DomainError(f"branch {req.branch} has no positive representative on this polytope")
        f = flipped
    return f


def df_scan_report(req: models.DfScanRequest) -> models.DfScanResponse:
    t0 = time.perf_counter()
    poly = _build_polytope(req.polytope)
    f = resolve_scan_potential(req)
    verdict = stability_verdict(poly, f, req.n, grid=req.grid, threads=req.threads)
    return models.DfScanResponse(
        report=verdict_report(poly, f, req.n, verdict),
        csv=scan_csv_text(verdict.tables),
        runtime_s=time.perf_counter() - t0,
    )


def verify(req: models.VerifyRequest) -> models.VerifyResponse:
    checks = run_suite(req.suite)
    return models.VerifyResponse(
        suite=req.suite,
        checks=[
            models.CheckModel(
                name=c.name, passed=c.passed, worst=c.worst, tol=c.tol, detail=c.detail
            )
            for c in checks
        ],
        all_passed=all(c.passed for c in checks),
    )
