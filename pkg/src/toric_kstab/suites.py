"""Cross-checking suites: integral identities, curvature algebra, slice principle.

Each suite runs a fixed list of named checks over seeded random inputs and
returns one record per check with the worst observed deviation and its
tolerance.  The randomness is deterministic (fixed seeds) so a suite run is
reproducible bit for bit; the checks compare quantities computed through
genuinely different code paths (moment-based vs quadrature-based integrals,
analytic vs finite-difference derivatives), so they would catch a consistent
bias in any single path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .abreu import (
    canonical_arrays,
    divergence_form_residual,
    hessian_divergence,
    integration_by_parts_residual,
    weighted_scalar_curvature,
    weighted_scalar_curvature_via_laplacian,
)
from .criticalpoints import closed_form_family, verify_slice_principle
from .errors import DomainError
from .functionals import (
    FunctionalContext,
    c_const,
    d_const,
    df,
    df_pair,
    eh,
    futaki,
    vol,
)
from .polytope import (
    AffineFn2,
    Polytope2,
    SPLFn,
    delta_p,
    from_vertices,
    pullback_affine,
    unimodular_transform,
)
from .quadrature import PolyWeight

_SEED = 20260823


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    tol: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"[{status}] {self.name}: worst {self.worst:.3e} vs tol {self.tol:.1e}{extra}"


# ---------------------------------------------------------------------------
# random input models


def _unit_square() -> Polytope2:
    return from_vertices([(0, 0), (1, 0), (1, 1), (0, 1)])


def _unit_simplex() -> Polytope2:
    return from_vertices([(0, 0), (1, 0), (0, 1)])


def _random_unimodular(rng) -> np.ndarray:
    """Bounded product of lattice shears and quarter turns (det = +-1)."""
    U = np.eye(2, dtype=int)
    for _ in range(int(rng.integers(1, 4))):
        k = int(rng.integers(-2, 3))
        S = np.array([[1, k], [0, 1]]) if rng.random() < 0.5 else np.array([[1, 0], [k, 1]])
        U = U @ S
    if rng.random() < 0.5:
        U = U @ np.array([[0, -1], [1, 0]])
    return U


def _random_polytope(rng) -> Polytope2:
    base = [_unit_square(), _unit_simplex(), delta_p(float(rng.uniform(0.08, 0.92)))]
    poly = base[int(rng.integers(0, 3))]
    shift = rng.integers(-3, 4, size=2).astype(float)
    return unimodular_transform(poly, _random_unimodular(rng), shift)


def _random_positive_affine(rng, polytope: Polytope2) -> AffineFn2:
    a, b = rng.uniform(-2.0, 2.0, size=2)
    low = min(float(a * x + b * y) for x, y in polytope.vertices)
    return AffineFn2(float(a), float(b), float(-low + rng.uniform(0.6, 1.5)))


def _random_n(rng) -> float:
    return float(rng.choice([3.0, 4.0, 5.0, 6.0, 2.5, 3.5, 4.5]))


def _random_crease_spl(rng, polytope: Polytope2) -> SPLFn:
    """An sPL function whose crease passes near the centroid (never empty)."""
    theta = rng.uniform(0.0, 2.0 * math.pi)
    grad = np.array([math.cos(theta), math.sin(theta)])
    jitter = 0.1 * polytope.diameter() * rng.uniform(-1.0, 1.0)
    c = -float(grad @ polytope.centroid) + jitter
    return SPLFn.from_affine(AffineFn2(float(grad[0]), float(grad[1]), float(c)), polytope)


def _rel(x: float, y: float, floor: float = 1e-30) -> float:
    return abs(x - y) / max(abs(x), abs(y), floor)


# The DF and Futaki values of generic test functions arise as differences of
# O(1) boundary and interior terms and can be incidentally tiny, so "relative"
# deviations are measured against the size of those terms, not the difference.
def _df_scale(ctx: FunctionalContext) -> float:
    b0 = 2.0 * float(ctx.boundary_moments(1.0 - ctx.n)[0])
    return abs(b0) * max(1.0, ctx.polytope.diameter())


# quadrature tolerance for the suites: well below the check tolerances
_SUITE_TOL = 1e-12


# ---------------------------------------------------------------------------
# identities suite


def identities_suite() -> list:
    rng = np.random.default_rng(_SEED)
    checks = []

    # Fut(const) = 0 and the algebraic EH identity, on the same 100 draws
    worst_fut = 0.0
    worst_eh = 0.0
    for _ in range(100):
        poly = _random_polytope(rng)
        ctx = FunctionalContext(poly, _random_positive_affine(rng, poly), _random_n(rng))
        scale = 2.0 * float(ctx.boundary_moments(1.0 - ctx.n)[0])
        worst_fut = max(worst_fut, abs(futaki(ctx, AffineFn2(0, 0, 1))) / scale)
        worst_eh = max(worst_eh, _rel(eh(ctx), d_const(ctx) * vol(ctx) ** (2.0 / ctx.n)))
    checks.append(
        CheckResult("futaki-kills-constants", worst_fut < 1e-10, worst_fut, 1e-10, "100 draws")
    )
    checks.append(
        CheckResult(
            "eh-equals-d-times-vol-power", worst_eh < 1e-9, worst_eh, 1e-9, "100 draws"
        )
    )

    # DF on affine data reduces to the Futaki invariant: via the everywhere-
    # positive sPL route (quadrature path) and via the crease pair difference
    worst = 0.0
    for _ in range(25):
        poly = _random_polytope(rng)
        f = _random_positive_affine(rng, poly)
        ctx = FunctionalContext(poly, f, _random_n(rng), _SUITE_TOL)
        ref = _df_scale(ctx)
        psi = _random_positive_affine(rng, poly)
        a, b = df(ctx, SPLFn.from_affine(psi, poly)), futaki(ctx, psi)
        worst = max(worst, abs(a - b) / max(abs(a), abs(b), ref))
        spl = _random_crease_spl(rng, poly)
        pos, neg = df_pair(ctx, spl)
        fut = futaki(ctx, spl.L)
        worst = max(worst, abs((pos - neg) - fut) / max(abs(pos), abs(neg), abs(fut), ref))
    checks.append(
        CheckResult("df-affine-equals-futaki", worst < 1e-10, worst, 1e-10, "25 draws x 2 routes")
    )

    # scaling covariance DF(Cf) = C^(1-n) DF(f) and EH homogeneity.  The
    # halved potential steepens the interior integrand, so this check runs
    # the quadrature an order tighter than the others.
    worst_df = 0.0
    worst_hom = 0.0
    for _ in range(10):
        poly = _random_polytope(rng)
        f = _random_positive_affine(rng, poly)
        n = _random_n(rng)
        ctx = FunctionalContext(poly, f, n, _SUITE_TOL / 10.0)
        spl = _random_crease_spl(rng, poly)
        base = df(ctx, spl)
        for C in (0.5, 2.0):
            ctx_s = FunctionalContext(poly, f.scaled(C), n, _SUITE_TOL / 10.0)
            got, want = df(ctx_s, spl), C ** (1.0 - n) * base
            worst_df = max(
                worst_df, abs(got - want) / max(abs(got), abs(want), _df_scale(ctx_s))
            )
            worst_hom = max(worst_hom, _rel(eh(ctx_s), eh(ctx)))
    checks.append(
        CheckResult("df-scaling-covariance", worst_df < 1e-9, worst_df, 1e-9, "C in {0.5, 2}")
    )
    checks.append(
        CheckResult("eh-homogeneity-degree-0", worst_hom < 1e-9, worst_hom, 1e-9, "C in {0.5, 2}")
    )

    # invariance under lattice-preserving affine maps
    worst = 0.0
    bases = [_unit_square(), _unit_simplex(), delta_p(0.3), delta_p(0.7)]
    for i in range(20):
        poly = bases[i % len(bases)]
        f = _random_positive_affine(rng, poly)
        n = _random_n(rng)
        ctx = FunctionalContext(poly, f, n, _SUITE_TOL)
        ref = _df_scale(ctx)
        spl = _random_crease_spl(rng, poly)
        U = _random_unimodular(rng)
        t = rng.integers(-2, 3, size=2).astype(float)
        poly_t = unimodular_transform(poly, U, t)
        ctx_t = FunctionalContext(poly_t, pullback_affine(f, U, t), n, _SUITE_TOL)
        spl_t = SPLFn.from_affine(pullback_affine(spl.L, U, t), poly_t)
        worst = max(worst, _rel(eh(ctx_t), eh(ctx)))
        a, b = df(ctx_t, spl_t), df(ctx, spl)
        worst = max(worst, abs(a - b) / max(abs(a), abs(b), ref))
        fut, fut_t = futaki(ctx, spl.L), futaki(ctx_t, spl_t.L)
        worst = max(worst, abs(fut_t - fut) / max(abs(fut), abs(fut_t), ref))
    checks.append(
        CheckResult("unimodular-invariance", worst < 1e-8, worst, 1e-8, "20 maps; eh, df, fut")
    )
    return checks


# ---------------------------------------------------------------------------
# curvature algebra suite


def _simplex_points(rng, count: int) -> np.ndarray:
    pts = []
    while len(pts) < count:
        x, y = rng.uniform(0.02, 0.98, size=2)
        if x + y < 0.98:
            pts.append((x, y))
    return np.array(pts)


def _centroid_clearance(polytope: Polytope2) -> float:
    nu, lam = polytope.edge_functions()
    ell = polytope.centroid @ nu.T - lam
    return float(np.min(ell / np.linalg.norm(nu, axis=1)))


def _interior_points(rng, polytope: Polytope2, count: int, clearance: float) -> np.ndarray:
    """Uniform interior samples at least `clearance` fraction of the
    centroid's boundary distance away from every edge (so rejection always
    terminates: the centroid itself qualifies for any fraction < 1)."""
    margin = clearance * _centroid_clearance(polytope)
    lo = polytope.vertices.min(axis=0)
    hi = polytope.vertices.max(axis=0)
    pts = []
    while len(pts) < count:
        cand = rng.uniform(lo, hi, size=(8 * count, 2))
        keep = _edge_distance(polytope, cand) > margin
        pts.extend(map(tuple, cand[keep]))
    return np.array(pts[:count])


def _edge_distance(polytope: Polytope2, pts: np.ndarray) -> np.ndarray:
    nu, lam = polytope.edge_functions()
    ell = pts @ nu.T - lam
    return np.min(ell / np.linalg.norm(nu, axis=1), axis=1)


def _fd_hessian_divergence(polytope: Polytope2, x: np.ndarray, f: AffineFn2, alpha: float):
    """sum_ij d_i d_j (f^alpha H_ij) at x by Richardson-extrapolated differences.

    Independent of the analytic dH/d2H arrays: only pointwise values of
    f^alpha H enter.  The step is a fixed fraction of the distance to the
    boundary: large enough that matrix-inversion noise in the field survives
    the 1/h^2 amplification, small enough for the h^6 extrapolation to hold.
    """
    h = 0.1 * float(_edge_distance(polytope, x[None, :])[0])

    def field(pts):
        _, H, _, _, _ = canonical_arrays(polytope, pts)
        return f(pts)[:, None, None] ** alpha * H

    def d2sum(step):
        e1 = np.array([step, 0.0])
        e2 = np.array([0.0, step])
        stencil = np.array(
            [x, x + e1, x - e1, x + e2, x - e2, x + e1 + e2, x + e1 - e2, x - e1 + e2, x - e1 - e2]
        )
        F = field(stencil)
        dxx = (F[1, 0, 0] - 2.0 * F[0, 0, 0] + F[2, 0, 0]) / step**2
        dyy = (F[3, 1, 1] - 2.0 * F[0, 1, 1] + F[4, 1, 1]) / step**2
        dxy = (F[5, 0, 1] - F[6, 0, 1] - F[7, 0, 1] + F[8, 0, 1]) / (4.0 * step**2)
        return dxx + 2.0 * dxy + dyy

    d0, d1, d2 = d2sum(h), d2sum(h / 2.0), d2sum(h / 4.0)
    r1a = (4.0 * d1 - d0) / 3.0
    r1b = (4.0 * d2 - d1) / 3.0
    return (16.0 * r1b - r1a) / 15.0


def abreu_suite() -> list:
    rng = np.random.default_rng(_SEED + 1)
    checks = []

    # canonical simplex: closed-form inverse Hessian and constant curvature
    pts = _simplex_points(rng, 100)
    _, H, _, _, s_J = canonical_arrays(_unit_simplex(), pts)
    worst_s = float(np.max(np.abs(s_J - 12.0)))
    mu1, mu2 = pts[:, 0], pts[:, 1]
    H_exact = np.empty_like(H)
    H_exact[:, 0, 0] = 2.0 * (mu1 - mu1**2)
    H_exact[:, 1, 1] = 2.0 * (mu2 - mu2**2)
    H_exact[:, 0, 1] = H_exact[:, 1, 0] = -2.0 * mu1 * mu2
    worst_h = float(np.max(np.abs(H - H_exact)))
    checks.append(
        CheckResult(
            "simplex-curvature-is-12",
            worst_s < 1e-8,
            worst_s,
            1e-8,
            f"100 points; max |H - closed form| = {worst_h:.1e}",
        )
    )

    # pointwise divergence form of the weighted curvature at k = -2: the
    # curvature assembled two ways (direct sum and via the drift laplacian)
    # against the divergence of f^(1-n) H
    worst = 0.0
    for _ in range(10):
        poly = unimodular_transform(
            delta_p(float(rng.uniform(0.1, 0.9))),
            _random_unimodular(rng),
            rng.integers(-2, 3, size=2).astype(float),
        )
        f = _random_positive_affine(rng, poly)
        n = _random_n(rng)
        sample = _interior_points(rng, poly, 100, clearance=0.02)
        fv = f(sample)
        lhs_direct = weighted_scalar_curvature(poly, sample, f, -2.0, n) * fv ** (-1.0 - n)
        lhs_lap = weighted_scalar_curvature_via_laplacian(poly, sample, f, -2.0, n) * fv ** (
            -1.0 - n
        )
        rhs = -hessian_divergence(poly, sample, f, 1.0 - n)
        floor = 1e-3 * float(np.max(np.abs(rhs)))
        denom = np.maximum(np.abs(rhs), floor)
        worst = max(worst, float(np.max(np.abs(lhs_direct - rhs) / denom)))
        worst = max(worst, float(np.max(np.abs(lhs_lap - rhs) / denom)))
    checks.append(
        CheckResult(
            "weighted-curvature-divergence-form",
            worst < 1e-8,
            worst,
            1e-8,
            "1000 points, 10 quadrilaterals, 2 assembly routes",
        )
    )

    # product-rule expansion of sum (f^alpha H)_,ij for random real alpha,
    # against a pure finite-difference oracle.  Mild shears only: on sliver
    # polytopes the inverse-Hessian field is too ill-conditioned for the FD
    # reference itself (the strong-shear regime is covered by the exact
    # invariance checks in the identities suite).
    worst = 0.0
    for _ in range(30):
        k = int(rng.integers(-1, 2))
        poly = unimodular_transform(delta_p(float(rng.uniform(0.15, 0.85))), [[1, k], [0, 1]])
        f = _random_positive_affine(rng, poly)
        alpha = float(rng.uniform(-4.0, 3.0))
        x = _interior_points(rng, poly, 1, clearance=0.5)[0]
        analytic = float(hessian_divergence(poly, x[None, :], f, alpha)[0])
        numeric = _fd_hessian_divergence(poly, x, f, alpha)
        worst = max(worst, abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-6))
    checks.append(
        CheckResult(
            "hessian-divergence-expansion",
            worst < 1e-8,
            worst,
            1e-8,
            "30 draws, random alpha, FD oracle",
        )
    )

    # the reduction must fail off k = -2: same residual at (k, n) = (-1, 4)
    poly = delta_p(0.3)
    f = _random_positive_affine(rng, poly)
    sample = _interior_points(rng, poly, 20, clearance=0.3)
    res_off = divergence_form_residual(poly, sample, f, -1.0, 4.0)
    res_on = divergence_form_residual(poly, sample, f, -2.0, 4.0)
    alpha_off = -1.0 * 3.0 / 2.0
    scale = float(
        np.max(
            np.abs(
                weighted_scalar_curvature(poly, sample, f, -1.0, 4.0)
                * f(sample) ** (-1.0 + alpha_off)
            )
        )
    )
    low = float(np.min(np.abs(res_off))) / scale
    on_size = float(np.max(np.abs(res_on))) / scale
    checks.append(
        CheckResult(
            "reduction-fails-off-k-minus-2",
            low > 1e-3 and on_size < 1e-10,
            low,
            1e-3,
            f"(k,n)=(-1,4) residual stays above threshold; k=-2 residual {on_size:.1e}",
        )
    )

    # integration by parts against the boundary term, affine and quadratic
    worst = 0.0
    for weight in (PolyWeight((0.4, 1.0, -0.3)), PolyWeight((0.2, -0.5, 0.3, 0.8, -0.4, 0.6))):
        for poly in (_unit_simplex(), delta_p(0.4)):
            f2 = _random_positive_affine(rng, poly)
            n = 4.0
            r = integration_by_parts_residual(poly, f2, n, weight)
            ctx = FunctionalContext(poly, f2, n)
            scale2 = 2.0 * float(ctx.boundary_moments(1.0 - n)[0])
            worst = max(worst, abs(r) / scale2)
    checks.append(
        CheckResult(
            "integration-by-parts",
            worst < 1e-4,
            worst,
            1e-4,
            "affine + quadratic weights, margin extrapolation",
        )
    )
    return checks


# ---------------------------------------------------------------------------
# slice principle suite


def _critical_catalog() -> list:
    """Known critical rays: closed-form families plus the symmetric cases."""
    cases = [
        (delta_p(0.1), closed_form_family(0.1, "c_minus"), "delta_p(0.1) c_minus"),
        (delta_p(0.1), closed_form_family(0.1, "c_plus"), "delta_p(0.1) c_plus"),
        (delta_p(0.2), closed_form_family(0.2, "c_minus"), "delta_p(0.2) c_minus"),
        (delta_p(0.35), closed_form_family(0.35, "c_plus"), "delta_p(0.35) c_plus"),
        (delta_p(0.92), closed_form_family(0.92, "b_plus"), "delta_p(0.92) b_plus"),
        (delta_p(0.95), closed_form_family(0.95, "b_minus"), "delta_p(0.95) b_minus"),
        (_unit_square(), AffineFn2(0, 0, 1), "square constant"),
        (_unit_simplex(), AffineFn2(0, 0, 1), "simplex constant"),
    ]
    out = []
    for poly, f, label in cases:
        if f.min_on(poly) <= 0.0:
            f = -f
        out.append((poly, f, label))
    return out


def slice_suite() -> list:
    rng = np.random.default_rng(_SEED + 2)
    checks = []

    worst_res = 0.0
    worst_cd = 0.0
    for poly, f, label in _critical_catalog():
        report = verify_slice_principle(poly, 4.0, f, tol=1e-5)
        worst_res = max(worst_res, report["futaki_residual"], report["slice_residual"])
        worst_cd = max(
            worst_cd, abs(report["c_const"] - report["d_const"]) / abs(report["d_const"])
        )
    checks.append(
        CheckResult(
            "critical-rays-are-slice-stationary",
            worst_res < 1e-5 and worst_cd < 1e-6,
            worst_res,
            1e-5,
            f"8 rays; worst |c-d| relative = {worst_cd:.1e}",
        )
    )

    low = math.inf
    polys = [delta_p(0.1), _unit_square()]
    for i in range(50):
        poly = polys[i % 2]
        f = _random_positive_affine(rng, poly)
        report = verify_slice_principle(poly, 4.0, f, tol=1e-5)
        low = min(low, report["futaki_residual"], report["slice_residual"])
    checks.append(
        CheckResult(
            "generic-rays-are-not-stationary",
            low > 1e-3,
            low,
            1e-3,
            "50 draws; smallest of both residuals",
        )
    )
    return checks


SUITES = {
    "identities": identities_suite,
    "abreu": abreu_suite,
    "slice": slice_suite,
}


def run_suite(name: str) -> list:
    try:
        fn = SUITES[name]
    except KeyError:
        raise DomainError(f"unknown suite {name!r}; choose from {sorted(SUITES)}") from None
    return fn()
