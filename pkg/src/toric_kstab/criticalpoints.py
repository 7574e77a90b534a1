"""Critical rays of the normalized Einstein-Hilbert functional.

EH_n(a, b, c) is degree-0 homogeneous in the potential coefficients, so its
critical points over the positivity cone are rays; we search for them on the
unit sphere with a projected Newton method from a deterministic Fibonacci
multistart grid, and verify each hit through the vanishing of the Futaki
residuals (the two characterizations agree: a potential is EH-critical iff
its Futaki invariant vanishes on all affine functions).

For the quadrilateral Delta_p the known closed-form families are provided
verbatim:

    (a) (1, 0, p(1 - sqrt(1-p)) / (2 sqrt(1-p) + p - 2)),          0 < p < 1
    (b) (-1, 0, p(3p +- sqrt(9p^2-8p)) / (2(p +- sqrt(9p^2-8p)))), 8/9 < p < 1
    (c) (-p^2+4p-2 +- sqrt(F(p)), +-2 sqrt(F(p)), -p^2-2p+2 -+ sqrt(F(p))),
                                                                   0 < p < alpha

with F(x) = x^4 - 4x^3 + 16x^2 - 16x + 4 and alpha ~ 0.386 its smallest
positive root.  Note the printed family (a) triple has a negative constant
term throughout 0 < p < 1 and so is itself non-positive on Delta_p; the
numerical search is treated as ground truth and family matching is done up
to an overall sign, with the flip recorded (see ``match_families``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ToleranceError
from .functionals import (
    FunctionalContext,
    c_const,
    d_const,
    eh,
    eh_gradient,
    eh_hessian,
    futaki,
    vol,
)
from .polytope import AffineFn2, Polytope2, delta_p

_QTOL = 1e-10  # quadrature tolerance inside the search


# ---------------------------------------------------------------------------
# closed forms


def quartic_value(x: float) -> float:
    """F(x) = x^4 - 4x^3 + 16x^2 - 16x + 4."""
    return ((x - 4.0) * x * x + 16.0 * x - 16.0) * x + 4.0


def _quartic_slope(x: float) -> float:
    return ((4.0 * x - 12.0) * x + 32.0) * x - 16.0


_ALPHA_CACHE: list = []


def quartic_alpha() -> float:
    """The root of F in (0, 1), by Newton safeguarded with bisection.

    F(0) = 4 > 0 > F(0.4), so the bracket [0, 0.4] isolates the smaller of
    the two roots F has in (0, 1); this is the upper limit of the p-range of
    family (c).
    """
    if _ALPHA_CACHE:
        return _ALPHA_CACHE[0]
    lo, hi = 0.0, 0.4
    x = 0.5 * (lo + hi)
    for _ in range(100):
        fx = quartic_value(x)
        if fx > 0.0:
            lo = x
        else:
            hi = x
        step = fx / _quartic_slope(x)
        x_new = x - step
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) < 1e-15:
            x = x_new
            break
        x = x_new
    _ALPHA_CACHE.append(x)
    return x


_BRANCHES = ("a", "b_plus", "b_minus", "c_plus", "c_minus")


def closed_form_family(p: float, branch: str) -> AffineFn2:
    """The printed coefficient triple of a critical family on Delta_p (C = 1).

    Branch ranges: (a) any p in (0,1); (b_plus/b_minus) 8/9 < p < 1;
    (c_plus/c_minus) 0 < p < alpha.  Outside the range a domain error is
    raised.  The triples are returned exactly as printed -- in particular
    family (a) comes out with a negative constant term (its positive ray is
    the negation; see the module docstring).
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must be in (0,1), got {p}")
    if branch == "a":
        root = math.sqrt(1.0 - p)
        return AffineFn2(1.0, 0.0, p * (1.0 - root) / (2.0 * root + p - 2.0))
    if branch in ("b_plus", "b_minus"):
        if not 8.0 / 9.0 < p:
            raise DomainError(
                f"family (b) needs 8/9 < p < 1, got p = {p}"
            )
        sign = 1.0 if branch == "b_plus" else -1.0
        root = sign * math.sqrt(9.0 * p * p - 8.0 * p)
        return AffineFn2(
            -1.0, 0.0, p * (3.0 * p + root) / (2.0 * (p + root))
        )
    if branch in ("c_plus", "c_minus"):
        alpha = quartic_alpha()
        if not p < alpha:
            raise DomainError(
                f"family (c) needs 0 < p < {alpha:.6f}, got p = {p}"
            )
        sign = 1.0 if branch == "c_plus" else -1.0
        root = sign * math.sqrt(quartic_value(p))
        return AffineFn2(
            -p * p + 4.0 * p - 2.0 + root,
            2.0 * root,
            -p * p - 2.0 * p + 2.0 - root,
        )
    raise DomainError(f"unknown branch {branch!r}; expected one of {_BRANCHES}")


# ---------------------------------------------------------------------------
# gradient interface


def eh_value_and_gradient(polytope: Polytope2, n: float, f: AffineFn2):
    """(EH_n(f), gradient in (a, b, c)); raises if f is not positive."""
    ctx = FunctionalContext(polytope, f, n, _QTOL)
    return eh(ctx), eh_gradient(ctx)


# ---------------------------------------------------------------------------
# multistart projected Newton on the unit sphere


@dataclass(frozen=True)
class SearchConfig:
    multistart: int = 200
    max_iter: int = 60
    grad_tol: float = 1e-8
    dedup_angle: float = 1e-6
    cone_barrier: float = 1e-8
    # starts additionally keep this clearance from the cone walls: starting
    # integrals there are astronomically graded and never near a critical ray
    start_margin: float = 5e-3
    # exploration phase runs the quadrature at this coarser tolerance and a
    # matching gradient target; candidates are then polished at full accuracy
    explore_qtol: float = 1e-8
    explore_grad_tol: float = 3e-7


@dataclass(frozen=True)
class CriticalRay:
    """A normalized critical potential with its verification data."""

    f: AffineFn2
    eh: float
    grad_norm: float
    futaki_residuals: tuple
    cd_gap: float
    classification: str

    def as_dict(self) -> dict:
        return {
            "f": [self.f.a, self.f.b, self.f.c],
            "eh": self.eh,
            "grad_norm": self.grad_norm,
            "futaki_residuals": list(self.futaki_residuals),
            "cd_gap": self.cd_gap,
            "classification": self.classification,
        }


def _fibonacci_sphere(count: int) -> np.ndarray:
    i = np.arange(count)
    z = 1.0 - 2.0 * (i + 0.5) / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    theta = math.pi * (3.0 - math.sqrt(5.0)) * i
    return np.column_stack([r * np.cos(theta), r * np.sin(theta), z])


def _edge_generators(polytope: Polytope2) -> np.ndarray:
    """Unit coefficient vectors of the edge functions ell_k = <nu_k, x> - lam_k.

    These are the extreme rays of the positivity cone: ell_k is nonnegative
    on the polygon and vanishes exactly on edge k, so every positive
    potential is a positive combination of them plus interior directions.
    """
    nu, lam = polytope.edge_functions()
    gens = np.column_stack([nu, -lam])
    return gens / np.linalg.norm(gens, axis=1, keepdims=True)


def _simplex_weights(m: int, level: int) -> np.ndarray:
    """All nonnegative integer compositions of ``level`` into m parts, scaled."""
    out = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            out.append(prefix + [remaining])
            return
        for v in range(remaining + 1):
            rec(prefix + [v], remaining - v, slots - 1)

    rec([], level, m)
    return np.asarray(out, dtype=float) / level


def _make_starts(polytope: Polytope2, cfg: SearchConfig) -> list:
    """Deterministic multistart points: a Fibonacci sphere grid filtered by
    positivity, plus positive edge-function combinations on a simplex grid.

    The second family is essential: rays hugging a cone wall (small potential
    value at one vertex) occupy a thin solid angle on the sphere but have
    well-spread barycentric coordinates over the extreme rays.
    """
    margin = max(cfg.start_margin, cfg.cone_barrier)
    starts = []
    for x in _fibonacci_sphere(cfg.multistart):
        if _min_vertex_value(polytope, x) > margin:
            starts.append(x)
    gens = _edge_generators(polytope)
    m = len(gens)
    # densest simplex grid whose point count C(level+m-1, m-1) fits the budget
    level = 1
    while math.comb(level + m, m - 1) <= max(cfg.multistart, m + 1):
        level += 1
    for w in _simplex_weights(m, level):
        x = w @ gens
        norm = np.linalg.norm(x)
        if norm < 1e-12:
            continue
        x = x / norm
        if _min_vertex_value(polytope, x) > margin:
            starts.append(x)
    # drop near-duplicates, keeping first occurrence (deterministic order)
    kept: list = []
    for x in starts:
        if not any(float(x @ y) > 1.0 - 1e-8 for y in kept):
            kept.append(x)
    return kept


def _min_vertex_value(polytope: Polytope2, x: np.ndarray) -> float:
    return AffineFn2(*x).min_on(polytope)


def _tangent_basis(x: np.ndarray) -> np.ndarray:
    pick = np.array([1.0, 0.0, 0.0]) if abs(x[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t1 = pick - (pick @ x) * x
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(x, t1)
    return np.column_stack([t1, t2])


def _projected_grad(polytope: Polytope2, n: float, x: np.ndarray, qtol: float) -> np.ndarray:
    ctx = FunctionalContext(polytope, AffineFn2(*x), n, qtol)
    g = eh_gradient(ctx)
    return g - (g @ x) * x


def _newton_from(
    polytope: Polytope2,
    n: float,
    start: np.ndarray,
    cfg: SearchConfig,
    qtol: float,
    grad_tol: float,
    max_iter: int,
):
    """One projected-Newton run; returns the converged unit vector or None."""
    x = start / np.linalg.norm(start)
    try:
        g = _projected_grad(polytope, n, x, qtol)
    except (DomainError, ToleranceError):
        return None
    gn = float(np.linalg.norm(g))
    for _ in range(max_iter):
        if gn < grad_tol:
            return x
        try:
            ctx = FunctionalContext(polytope, AffineFn2(*x), n, qtol)
            h3 = eh_hessian(ctx)
        except (DomainError, ToleranceError):
            return None
        t = _tangent_basis(x)
        h2 = t.T @ h3 @ t
        g2 = t.T @ g
        # invert on the tangent plane; clip tiny eigenvalues so steps toward
        # saddles stay finite without changing their direction
        evals, evecs = np.linalg.eigh(h2)
        floor = 1e-10 * max(1.0, float(np.abs(evals).max()))
        safe = np.where(np.abs(evals) < floor, np.copysign(floor, evals), evals)
        d2 = -evecs @ ((evecs.T @ g2) / safe)
        norm_d = float(np.linalg.norm(d2))
        if norm_d > 0.5:  # sphere-scale trust region
            d2 *= 0.5 / norm_d
        step = 1.0
        improved = False
        while step > 1e-6:
            xn = x + t @ (step * d2)
            xn /= np.linalg.norm(xn)
            if _min_vertex_value(polytope, xn) > cfg.cone_barrier:
                try:
                    g_new = _projected_grad(polytope, n, xn, qtol)
                except (DomainError, ToleranceError):
                    step *= 0.5
                    continue
                gn_new = float(np.linalg.norm(g_new))
                if gn_new < gn:
                    x, g, gn = xn, g_new, gn_new
                    improved = True
                    break
            step *= 0.5
        if not improved:
            return None
    return x if gn < grad_tol else None


def _classify(h2_evals: np.ndarray) -> str:
    scale = max(1.0, float(np.abs(h2_evals).max()))
    if np.any(np.abs(h2_evals) < 1e-6 * scale):
        return "degenerate"
    if np.all(h2_evals > 0):
        return "minimum"
    if np.all(h2_evals < 0):
        return "maximum"
    return "saddle"


def _build_ray(polytope: Polytope2, n: float, x: np.ndarray) -> CriticalRay:
    f = AffineFn2(*(float(v) for v in x))
    ctx = FunctionalContext(polytope, f, n, _QTOL)
    g = eh_gradient(ctx)
    g = g - (g @ x) * x
    t = _tangent_basis(x)
    h2 = t.T @ eh_hessian(ctx) @ t
    res = (
        abs(futaki(ctx, AffineFn2(0.0, 0.0, 1.0))),
        abs(futaki(ctx, AffineFn2(1.0, 0.0, 0.0))),
        abs(futaki(ctx, AffineFn2(0.0, 1.0, 0.0))),
    )
    return CriticalRay(
        f=f,
        eh=eh(ctx),
        grad_norm=float(np.linalg.norm(g)),
        futaki_residuals=res,
        cd_gap=abs(c_const(ctx) - d_const(ctx)),
        classification=_classify(np.linalg.eigvalsh(h2)),
    )


def find_critical_rays(polytope: Polytope2, n: float, config: SearchConfig | None = None):
    """All critical rays found from the multistart grid, deduplicated and sorted.

    Deterministic for a fixed config.  The list may be empty; it is not
    guaranteed exhaustive (critical points of EH are not unique in general,
    and a finite multistart can only ever produce candidates).
    """
    cfg = config or SearchConfig()

    def angle(u, v):
        return math.acos(min(1.0, max(-1.0, float(u @ v))))

    # exploration at coarse quadrature tolerance
    candidates: list[np.ndarray] = []
    for start in _make_starts(polytope, cfg):
        x = _newton_from(
            polytope, n, start, cfg,
            qtol=cfg.explore_qtol,
            grad_tol=max(cfg.grad_tol, cfg.explore_grad_tol),
            max_iter=cfg.max_iter,
        )
        if x is None:
            continue
        if any(angle(x, y) < 1e-4 for y in candidates):
            continue
        candidates.append(x)

    # polish each candidate at full accuracy
    found: list[np.ndarray] = []
    for c in candidates:
        x = _newton_from(
            polytope, n, c, cfg,
            qtol=_QTOL, grad_tol=cfg.grad_tol, max_iter=20,
        )
        if x is None:
            continue
        if any(angle(x, y) < cfg.dedup_angle for y in found):
            continue
        found.append(x)
    found.sort(key=lambda v: (round(v[0], 9), round(v[1], 9), round(v[2], 9)))
    return [_build_ray(polytope, n, x) for x in found]


def match_families(p: float, rays, n: float = 4.0) -> list:
    """Compare found rays on Delta_p against the printed families.

    Each in-range branch is normalized and matched to the angularly nearest
    ray, allowing an overall sign flip (needed for family (a), whose printed
    triple is negative on the polytope).  Returns one record per branch with
    the distance and whether the flip was applied.
    """
    records = []
    for branch in _BRANCHES:
        try:
            f = closed_form_family(p, branch)
        except DomainError:
            continue
        v = f.coeffs / np.linalg.norm(f.coeffs)
        best = None
        for i, ray in enumerate(rays):
            u = ray.f.coeffs
            cosang = float(np.clip(u @ v, -1.0, 1.0))
            dist = math.acos(abs(cosang))
            if best is None or dist < best[1]:
                best = (i, dist, cosang < 0.0)
        rec = {"branch": branch, "coefficients": [f.a, f.b, f.c]}
        if best is None:
            rec.update({"matched_ray": None, "angular_distance": None, "sign_flipped": None})
        else:
            rec.update(
                {
                    "matched_ray": best[0],
                    "angular_distance": best[1],
                    "sign_flipped": bool(best[2]),
                }
            )
        records.append(rec)
    return records


# ---------------------------------------------------------------------------
# volume minimization on the constant-d slice


def verify_slice_principle(polytope: Polytope2, n: float, f: AffineFn2, tol: float = 1e-5) -> dict:
    """Check that f is vol-stationary on {d_const = d_const(f)} iff Fut = 0.

    The slice stationarity is measured by the Lagrange residual: the norm of
    the component of grad(vol) orthogonal to grad(d_const), relative to
    |grad(vol)|.  The Futaki residual is max |Fut(phi)| over the affine basis,
    relative to |d_const| * vol.  Both residuals are reported with a joint
    pass flag at the given tolerance; the d = 0 slice is out of scope.
    """
    ctx = FunctionalContext(polytope, f, n, _QTOL)
    d = d_const(ctx)
    if abs(d) < 1e-10:
        raise DomainError("the d_const = 0 slice is not supported")
    v = vol(ctx)
    basis = [AffineFn2(0, 0, 1), AffineFn2(1, 0, 0), AffineFn2(0, 1, 0)]
    fut_scale = abs(d) * v
    fut_residual = max(abs(futaki(ctx, phi)) for phi in basis) / fut_scale

    # gradients of vol and d in (a, b, c)
    mm = ctx.interior_moments(-1.0 - n)[:3]
    bm = ctx.boundary_moments(1.0 - n)[:3]
    # coefficient order (a, b, c) picks moments of (mu1, mu2, 1)
    reorder = np.array([1, 2, 0])
    grad_v = -n * mm[reorder]
    s = 2.0 * float(ctx.boundary_moments(2.0 - n)[0])
    grad_s = 2.0 * (2.0 - n) * bm[reorder]
    grad_d = (grad_s * v - s * grad_v) / v**2
    gd_norm = float(np.linalg.norm(grad_d))
    gv_norm = float(np.linalg.norm(grad_v))
    if gd_norm < 1e-14 or gv_norm < 1e-14:
        slice_residual = math.inf
    else:
        unit = grad_d / gd_norm
        ortho = grad_v - (grad_v @ unit) * unit
        slice_residual = float(np.linalg.norm(ortho)) / gv_norm

    return {
        "futaki_residual": fut_residual,
        "slice_residual": slice_residual,
        "d_const": d,
        "c_const": c_const(ctx),
        "vol": v,
        "tol": tol,
        "pass": bool(fut_residual < tol and slice_residual < tol),
    }


def delta_p_context(p: float, branch: str, n: float = 4.0) -> FunctionalContext:
    """Context for Delta_p with a family potential, negated if needed.

    The printed triple is used when positive on the polytope; otherwise its
    negation is tried (family (a)); if neither is positive a domain error
    propagates from the context constructor.
    """
    poly = delta_p(p)
    f = closed_form_family(p, branch)
    if f.min_on(poly) <= 0.0 and (-f).min_on(poly) > 0.0:
        f = -f
    return FunctionalContext(poly, f, n, _QTOL)
