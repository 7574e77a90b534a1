"""Adaptive quadrature for integrals of w(mu) * f(mu)^alpha over convex
polygons and their boundary edges.

All integrands met here are smooth on the closed polygon (f stays positive),
but strongly graded when min f << max f, which is exactly the regime of the
interesting Killing potentials.  The interior scheme fan-triangulates the
polygon from its centroid, applies a fixed degree-9 rule per cell and refines
by longest-edge bisection with a two-level error estimate.  Edges use an
adaptive Gauss-Legendre rule in the lattice arc-length parameter.  Piecewise
linear weights are handled by splitting the domain along the crease first,
never by integrating across a kink.

Evaluation is batched: the driver hands whole generations of cells to the
integrand as one (N, 2) array, and cell contributions are accumulated in a
fixed order with compensated summation, so results are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import DomainError, EvaluationError, ToleranceError
from .polytope import (
    AffineFn2,
    Polytope2,
    SPLFn,
    clip_polygon,
    polygon_area,
    polygon_centroid,
    split_along,
)

DEFAULT_TOL = 1e-10
MAX_DEPTH = 30
# hard cap on simultaneously refining cells: integrands too wild to converge
# under this budget raise ToleranceError instead of exhausting memory
MAX_CELLS = 16384


@dataclass(frozen=True)
class QuadResult:
    """Value of one integral with an a-posteriori absolute error estimate."""

    value: float
    error_estimate: float
    subdivisions: int

    def __add__(self, other: "QuadResult") -> "QuadResult":
        return QuadResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.subdivisions + other.subdivisions,
        )


# monomial basis used for polynomial weights of total degree <= 2
_BASIS = ("1", "x", "y", "x^2", "x*y", "y^2")


@dataclass(frozen=True)
class PolyWeight:
    """Polynomial weight sum(coeffs[i] * basis[i]) with basis 1, x, y, x^2, x*y, y^2.

    The coefficient list must have length 1, 3 or 6 (degree 0, 1 or 2).
    """

    coeffs: tuple

    def __post_init__(self):
        if len(self.coeffs) not in (1, 3, 6):
            raise DomainError(
                f"weight needs 1, 3 or 6 coefficients for basis {_BASIS}, "
                f"got {len(self.coeffs)}"
            )

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        x, y = pts[..., 0], pts[..., 1]
        c = self.coeffs
        out = np.full_like(x, float(c[0]))
        if len(c) >= 3:
            out = out + c[1] * x + c[2] * y
        if len(c) == 6:
            out = out + c[3] * x * x + c[4] * x * y + c[5] * y * y
        return out

    @staticmethod
    def from_affine(f: AffineFn2) -> "PolyWeight":
        return PolyWeight((f.c, f.a, f.b))


ONE = PolyWeight((1.0,))


def as_weight(w):
    """Coerce None / scalars / affine functions into a weight object."""
    if w is None:
        return ONE
    if isinstance(w, (PolyWeight, SPLFn)):
        return w
    if isinstance(w, AffineFn2):
        return PolyWeight.from_affine(w)
    if np.isscalar(w):
        return PolyWeight((float(w),))
    raise DomainError(f"cannot interpret {w!r} as an integration weight")


# ---------------------------------------------------------------------------
# fixed rules


@lru_cache(maxsize=None)
def _triangle_rule():
    """Degree-9 product rule on the reference triangle (0,0),(1,0),(0,1).

    Built from Gauss-Jacobi(1,0) x Gauss-Legendre through the substitution
    (x, y) = (u, (1-u) t), whose Jacobian (1-u) is absorbed by the Jacobi
    weight; 25 points, all interior, exact for total degree <= 9.
    """
    xj, wj = roots_jacobi(5, 1.0, 0.0)
    xl, wl = roots_legendre(5)
    u, wu = 0.5 * (xj + 1.0), 0.25 * wj
    t, wt = 0.5 * (xl + 1.0), 0.5 * wl
    uu, tt = np.meshgrid(u, t, indexing="ij")
    pts = np.column_stack([uu.ravel(), ((1.0 - uu) * tt).ravel()])
    wts = np.outer(wu, wt).ravel()
    return pts, wts


@lru_cache(maxsize=None)
def _segment_rule():
    """8-point Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = roots_legendre(8)
    return 0.5 * (x + 1.0), 0.5 * w


# ---------------------------------------------------------------------------
# batched adaptive drivers


def _eval_triangles(tris, fn):
    """Rule estimates on a batch of triangles: (M,3,2) -> (M,K)."""
    rp, rw = _triangle_rule()
    origin = tris[:, 0]
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    jac = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]  # = 2 * signed area
    pts = (
        origin[:, None, :]
        + rp[None, :, 0, None] * e1[:, None, :]
        + rp[None, :, 1, None] * e2[:, None, :]
    )
    vals = np.asarray(fn(pts.reshape(-1, 2)), dtype=float)
    vals = vals.reshape(len(tris), len(rw), -1)
    return np.einsum("q,mqk->mk", rw, vals) * jac[:, None]


def _bisect_longest(tris):
    """Split each triangle across the midpoint of its longest edge.

    Returns a (2M, 3, 2) array with the two children of parent i at
    positions 2i and 2i+1; orientation is preserved.
    """
    edge = np.roll(tris, -1, axis=1) - tris
    l2 = (edge**2).sum(axis=2)
    k = np.argmax(l2, axis=1)
    idx = (k[:, None] + np.arange(3)) % 3
    abc = np.take_along_axis(tris, idx[:, :, None], axis=1)
    a, b, c = abc[:, 0], abc[:, 1], abc[:, 2]
    mid = 0.5 * (a + b)
    child1 = np.stack([a, mid, c], axis=1)
    child2 = np.stack([mid, b, c], axis=1)
    return np.stack([child1, child2], axis=1).reshape(-1, 3, 2)


def polygon_integrals(vertices, fn, tol=DEFAULT_TOL, max_depth=MAX_DEPTH):
    """Adaptively integrate a batch of smooth integrands over a convex polygon.

    ``fn`` maps an (N, 2) point array to an (N, K) value array; the K
    integrals share one mesh, and each is refined until its two-level error
    estimate drops below tol * max(1, |value|) (apportioned to cells by area
    fraction).  Returns (values (K,), error estimates (K,), bisection count).

    Raises :class:`~toric_kstab.errors.ToleranceError` (carrying the best
    estimate) if the depth limit is hit before every integrand converges.
    """
    v = np.asarray(vertices, dtype=float)
    area = polygon_area(v)
    if area <= 0:
        raise DomainError("polygon_integrals needs a CCW polygon of positive area")
    c = polygon_centroid(v)
    m = len(v)
    tris = np.stack(
        [np.broadcast_to(c, (m, 2)), v, np.roll(v, -1, axis=0)], axis=1
    ).astype(float)
    coarse = _eval_triangles(tris, fn)
    nk = coarse.shape[1]
    # per-integrand magnitude scale, frozen at the first generation
    scale = np.maximum(1.0, np.abs(coarse.sum(axis=0)))
    cell_tol = tol * np.abs(
        np.array([polygon_area(t) for t in tris])
    ) / area  # (M,) area fractions times tol

    parts = [[] for _ in range(nk)]
    errs = [[] for _ in range(nk)]
    n_bisect = 0
    exhausted = False
    for depth in range(max_depth + 1):
        children = _bisect_longest(tris)
        n_bisect += len(tris)
        child_vals = _eval_triangles(children, fn)
        fine = child_vals[0::2] + child_vals[1::2]
        err = np.abs(fine - coarse)  # (M, K)
        done = np.all(err <= cell_tol[:, None] * scale[None, :], axis=1)
        if depth == max_depth or 2 * int((~done).sum()) > MAX_CELLS:
            exhausted = True
            done = np.ones(len(tris), dtype=bool)
        for k in range(nk):
            parts[k].extend(fine[done, k].tolist())
            errs[k].extend(err[done, k].tolist())
        keep = ~done
        if not keep.any():
            break
        pair = np.stack([keep, keep], axis=1).ravel()
        tris = children[pair]
        coarse = child_vals[pair]
        cell_tol = np.repeat(cell_tol[keep] * 0.5, 2)

    values = np.array([math.fsum(p) for p in parts])
    errors = np.array([math.fsum(e) for e in errs])
    if exhausted and np.any(errors > tol * np.maximum(1.0, np.abs(values))):
        raise ToleranceError(
            f"interior quadrature gave up at depth {depth} with error "
            f"{errors.max():.3e} (target {tol:.1e})",
            best=(values, errors, n_bisect),
        )
    return values, errors, n_bisect


def _eval_segments(spans, fn_t):
    """Gauss-Legendre estimates on parameter intervals: (M,2) -> (M,K)."""
    tq, wq = _segment_rule()
    a, b = spans[:, 0], spans[:, 1]
    ts = a[:, None] + (b - a)[:, None] * tq[None, :]
    vals = np.asarray(fn_t(ts.ravel()), dtype=float)
    vals = vals.reshape(len(spans), len(wq), -1)
    return np.einsum("q,mqk->mk", wq, vals) * (b - a)[:, None]


def segment_integrals(t_end, fn_t, tol=DEFAULT_TOL, max_depth=MAX_DEPTH, t_start=0.0):
    """Adaptively integrate fn_t (mapping (N,) -> (N, K)) over [t_start, t_end]."""
    length = t_end - t_start
    if length <= 0:
        raise DomainError("segment_integrals needs t_end > t_start")
    spans = np.array([[t_start, t_end]])
    coarse = _eval_segments(spans, fn_t)
    nk = coarse.shape[1]
    scale = np.maximum(1.0, np.abs(coarse.sum(axis=0)))
    span_tol = np.array([tol])

    parts = [[] for _ in range(nk)]
    errs = [[] for _ in range(nk)]
    n_bisect = 0
    exhausted = False
    for depth in range(max_depth + 1):
        mids = 0.5 * (spans[:, 0] + spans[:, 1])
        children = np.empty((2 * len(spans), 2))
        children[0::2, 0], children[0::2, 1] = spans[:, 0], mids
        children[1::2, 0], children[1::2, 1] = mids, spans[:, 1]
        n_bisect += len(spans)
        child_vals = _eval_segments(children, fn_t)
        fine = child_vals[0::2] + child_vals[1::2]
        err = np.abs(fine - coarse)
        done = np.all(err <= span_tol[:, None] * scale[None, :], axis=1)
        if depth == max_depth or 2 * int((~done).sum()) > MAX_CELLS:
            exhausted = True
            done = np.ones(len(spans), dtype=bool)
        for k in range(nk):
            parts[k].extend(fine[done, k].tolist())
            errs[k].extend(err[done, k].tolist())
        keep = ~done
        if not keep.any():
            break
        pair = np.stack([keep, keep], axis=1).ravel()
        spans = children[pair]
        coarse = child_vals[pair]
        span_tol = np.repeat(span_tol[keep] * 0.5, 2)

    values = np.array([math.fsum(p) for p in parts])
    errors = np.array([math.fsum(e) for e in errs])
    if exhausted and np.any(errors > tol * np.maximum(1.0, np.abs(values))):
        raise ToleranceError(
            f"edge quadrature gave up at depth {depth} with error "
            f"{errors.max():.3e} (target {tol:.1e})",
            best=(values, errors, n_bisect),
        )
    return values, errors, n_bisect


# ---------------------------------------------------------------------------
# public operations


def _require_positive(f: AffineFn2, vertices):
    vals = f(np.asarray(vertices, dtype=float))
    if np.min(vals) <= 0.0:
        raise DomainError(
            f"affine function ({f.a}, {f.b}, {f.c}) is not strictly positive "
            "on the polygon"
        )


def integrate_interior(polytope, w, f: AffineFn2, alpha: float, tol=DEFAULT_TOL):
    """Integral of w(mu) * f(mu)^alpha over the polygon, Lebesgue measure.

    ``polytope`` may be a :class:`~toric_kstab.polytope.Polytope2` or a bare
    CCW vertex array (used for pieces produced by a crease split).  A simple
    piecewise linear weight max{L, 0} is integrated by splitting the domain
    along {L = 0} and using the smooth weight L on the positive piece.
    """
    vertices = polytope.vertices if isinstance(polytope, Polytope2) else polytope
    if alpha != 0.0:
        _require_positive(f, vertices)
    w = as_weight(w)
    if isinstance(w, SPLFn):
        if isinstance(polytope, Polytope2):
            pos, _ = split_along(polytope, w.L)
        else:
            pos = clip_polygon(vertices, w.L, keep_positive=True)
        if pos is None:
            return QuadResult(0.0, 0.0, 0)
        return integrate_interior(pos, PolyWeight.from_affine(w.L), f, alpha, tol)

    def fn(pts):
        out = w(pts)
        if alpha != 0.0:
            out = out * f(pts) ** alpha
        return out[:, None]

    values, errors, n = polygon_integrals(vertices, fn, tol)
    return QuadResult(float(values[0]), float(errors[0]), n)


def integrate_boundary(
    polytope: Polytope2, w, f: AffineFn2, alpha: float, tol=DEFAULT_TOL, measure="lattice"
):
    """Integral of w(mu) * f(mu)^alpha over the boundary.

    Each edge is parametrized by lattice arc length (unit speed along the
    primitive direction) and integrated to tolerance tol / edge count.  A
    piecewise linear weight restricts each edge to its {L >= 0} interval.
    ``measure`` selects the edge measure: "lattice" (default, a primitive
    lattice step has length 1) or "euclidean" (ordinary arc length, applied
    as a constant per-edge rescaling).
    """
    if measure not in ("lattice", "euclidean"):
        raise DomainError(f"measure must be 'lattice' or 'euclidean', got {measure!r}")
    if alpha != 0.0:
        _require_positive(f, polytope.vertices)
    w = as_weight(w)
    edge_tol = tol / polytope.num_vertices
    total = QuadResult(0.0, 0.0, 0)
    for e in polytope.edges:
        start = polytope.vertices[e.start]
        direction = np.asarray(e.direction, dtype=float)
        t_lo, t_hi = 0.0, e.lattice_length
        linear = None
        if isinstance(w, SPLFn):
            # w = max{L, 0}: keep the sub-interval where L >= 0
            l0 = float(w.L(start))
            slope = float(w.L.gradient @ direction)
            if abs(slope) < 1e-15:
                if l0 <= 0.0:
                    continue
            else:
                t_cross = -l0 / slope
                if slope > 0:
                    t_lo = max(t_lo, t_cross)
                else:
                    t_hi = min(t_hi, t_cross)
                if t_hi - t_lo <= 1e-15 * max(1.0, e.lattice_length):
                    continue
            linear = w.L

        def fn_t(ts, _start=start, _dir=direction, _lin=linear):
            pts = _start[None, :] + ts[:, None] * _dir[None, :]
            out = _lin(pts) if _lin is not None else w(pts)
            if alpha != 0.0:
                out = out * f(pts) ** alpha
            return out[:, None]

        values, errors, n = segment_integrals(t_hi, fn_t, edge_tol, t_start=t_lo)
        scale = 1.0
        if measure == "euclidean":
            scale = e.euclidean_length / e.lattice_length
        total = total + QuadResult(scale * float(values[0]), scale * float(errors[0]), n)
    return total


def _inset_vertices(polytope: Polytope2, margin: float) -> np.ndarray:
    """Vertices of the polygon with every edge pushed inward by ``margin``."""
    nu, lam = polytope.edge_functions()
    norms = np.linalg.norm(nu, axis=1)
    # each edge line becomes <nu, x> = lam + margin * |nu|
    lam = lam + margin * norms
    m = len(nu)
    out = np.empty((m, 2))
    for i in range(m):
        a = np.array([nu[i - 1], nu[i]])
        b = np.array([lam[i - 1], lam[i]])
        try:
            out[i] = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:  # pragma: no cover - convex input
            raise DomainError("inset failed: parallel adjacent edges")
    if polygon_area(out) <= 0:
        raise DomainError(f"margin {margin} is too large for this polygon")
    return out


def integrate_field(polytope: Polytope2, field, tol=DEFAULT_TOL, boundary_margin=0.0):
    """Integrate a pointwise-defined field, optionally keeping clear of the boundary.

    With margin m > 0 the field is integrated over the polygon inset by m, 2m
    and 4m, and the three values are extrapolated to zero margin; the reported
    error includes the distance between the extrapolation and the innermost
    value.  Intended for identity-residual checks whose integrands are only
    available pointwise (and may be expensive or delicate at the boundary).
    """

    def fn(pts):
        vals = np.asarray(field(pts), dtype=float).reshape(-1)
        bad = ~np.isfinite(vals)
        if bad.any():
            where = pts[int(np.flatnonzero(bad)[0])]
            raise EvaluationError(
                f"field is not finite at ({where[0]:.6g}, {where[1]:.6g})",
                point=tuple(where),
            )
        return vals[:, None]

    if boundary_margin == 0.0:
        values, errors, n = polygon_integrals(polytope.vertices, fn, tol)
        return QuadResult(float(values[0]), float(errors[0]), n)
    if boundary_margin < 0.0:
        raise DomainError("boundary_margin must be >= 0")

    results = []
    subdivisions = 0
    quad_err = 0.0
    for k in (1.0, 2.0, 4.0):
        inset = _inset_vertices(polytope, k * boundary_margin)
        values, errors, n = polygon_integrals(inset, fn, tol)
        results.append(float(values[0]))
        quad_err += float(errors[0])
        subdivisions += n
    i1, i2, i4 = results
    # quadratic extrapolation of I(margin) from margins m, 2m, 4m to 0
    value = (8.0 * i1 - 6.0 * i2 + i4) / 3.0
    return QuadResult(value, abs(value - i1) + quad_err, subdivisions)
