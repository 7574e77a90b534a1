"""2-D Delzant polygons, affine Killing potentials and simple piecewise
linear test functions.

Conventions used throughout the package:

* Vertices are stored counterclockwise; input may be clockwise (it is
  reversed) but must already be in convex hull order.
* Each edge carries a primitive integer direction and the primitive inward
  normal obtained by rotating the direction by +90 degrees.
* The boundary of a lattice polygon is measured in the lattice measure:
  an edge of Euclidean length l with primitive direction e has lattice
  length l / |e|, so one primitive step has length 1.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError, PolytopeValidationError

# collinearity / degeneracy tolerance for desk-scale rational inputs
GEOM_TOL = 1e-12

# bound on denominators when recovering primitive integer edge directions
_MAX_DENOMINATOR = 10**6


class DelzantWarning(UserWarning):
    """A vertex fails the Delzant condition (edge directions not a lattice basis)."""


@dataclass(frozen=True)
class AffineFn2:
    """Affine function a*mu1 + b*mu2 + c on the plane."""

    a: float
    b: float
    c: float

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])

    @property
    def gradient(self) -> np.ndarray:
        return np.array([self.a, self.b])

    def __call__(self, pts):
        pts = np.asarray(pts, dtype=float)
        return pts[..., 0] * self.a + pts[..., 1] * self.b + self.c

    def scaled(self, factor: float) -> "AffineFn2":
        return AffineFn2(self.a * factor, self.b * factor, self.c * factor)

    def __neg__(self) -> "AffineFn2":
        return self.scaled(-1.0)

    def min_on(self, polytope: "Polytope2") -> float:
        return float(np.min(self(polytope.vertices)))


@dataclass(frozen=True)
class Edge:
    """One polygon edge with its lattice data.

    ``direction`` is the primitive integer vector along the edge (CCW
    orientation), ``normal`` the primitive integer inward normal, and
    ``offset`` the value of <normal, x> on the edge line, so that
    ell(x) = <normal, x> - offset is >= 0 on the polygon.
    """

    start: int
    end: int
    direction: tuple
    normal: tuple
    offset: float
    lattice_length: float
    euclidean_length: float


class Polytope2:
    """Strictly convex lattice polygon with CCW vertices and edge data.

    Use :func:`from_vertices` or :func:`delta_p` to construct one.
    """

    def __init__(self, vertices: np.ndarray, edges: list, delzant_ok: list):
        self.vertices = vertices
        self.edges = edges
        self.delzant_ok = delzant_ok
        self.is_delzant = all(delzant_ok)

    # -- basic measures ------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)

    @property
    def centroid(self) -> np.ndarray:
        return polygon_centroid(self.vertices)

    @property
    def lattice_perimeter(self) -> float:
        return float(sum(e.lattice_length for e in self.edges))

    @property
    def euclidean_perimeter(self) -> float:
        return float(sum(e.euclidean_length for e in self.edges))

    def diameter(self) -> float:
        v = self.vertices
        d = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((d**2).sum(-1)).max())

    # -- queries -------------------------------------------------------

    def edge_functions(self):
        """Inward normals and offsets as arrays: ell_k(x) = nu_k . x - lam_k >= 0."""
        nu = np.array([e.normal for e in self.edges], dtype=float)
        lam = np.array([e.offset for e in self.edges])
        return nu, lam

    def contains(self, pts, margin: float = 0.0):
        """Membership test; with margin > 0 requires ell_k >= margin for all edges."""
        pts = np.asarray(pts, dtype=float)
        nu, lam = self.edge_functions()
        ell = pts @ nu.T - lam
        return np.all(ell >= margin, axis=-1)

    def edge_point(self, edge_index: int, t: float) -> np.ndarray:
        """Point at lattice arc length t from the start of the given edge."""
        e = self.edges[edge_index]
        if t < -GEOM_TOL or t > e.lattice_length + GEOM_TOL:
            raise DomainError(
                f"parameter {t} outside [0, {e.lattice_length}] on edge {edge_index}"
            )
        return self.vertices[e.start] + t * np.asarray(e.direction, dtype=float)

    def shrunk(self, factor: float) -> np.ndarray:
        """Vertices scaled toward the centroid by the given factor (< 1)."""
        c = self.centroid
        return c + factor * (self.vertices - c)

    def __repr__(self):
        vs = ", ".join(f"({x:g},{y:g})" for x, y in self.vertices)
        return f"Polytope2[{vs}]"


# ---------------------------------------------------------------------------
# plain polygon helpers (also used for split pieces that carry no lattice data)


def polygon_area(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(vertices) -> np.ndarray:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    cross = x * np.roll(y, -1) - np.roll(x, -1) * y
    a = 0.5 * cross.sum()
    if abs(a) < GEOM_TOL:
        return v.mean(axis=0)
    cx = ((x + np.roll(x, -1)) * cross).sum() / (6.0 * a)
    cy = ((y + np.roll(y, -1)) * cross).sum() / (6.0 * a)
    return np.array([cx, cy])


def _primitive_direction(delta: np.ndarray) -> np.ndarray:
    """Primitive integer vector parallel to the (rational-slope) edge vector."""
    dx, dy = float(delta[0]), float(delta[1])
    scale = math.hypot(dx, dy)
    if scale < GEOM_TOL:
        raise PolytopeValidationError("zero-length edge")
    if abs(dx) <= GEOM_TOL * scale:
        prim = np.array([0, 1 if dy > 0 else -1])
    elif abs(dy) <= GEOM_TOL * scale:
        prim = np.array([1 if dx > 0 else -1, 0])
    else:
        ratio = Fraction(dy / dx).limit_denominator(_MAX_DENOMINATOR)
        sign = 1 if dx > 0 else -1
        prim = np.array([sign * ratio.denominator, sign * ratio.numerator])
        g = math.gcd(abs(prim[0]), abs(prim[1]))
        prim = prim // g
    cross = dx * prim[1] - dy * prim[0]
    if abs(cross) > 1e-9 * scale * np.linalg.norm(prim):
        raise DomainError(
            f"edge direction ({dx}, {dy}) has no small rational slope; "
            "no lattice structure"
        )
    return prim


def from_vertices(points) -> Polytope2:
    """Build a :class:`Polytope2` from vertices in convex hull order.

    Clockwise input is reversed to CCW.  Repeated points, collinear triples
    and out-of-order (non-convex) input raise
    :class:`~toric_kstab.errors.PolytopeValidationError`.  A vertex violating
    the Delzant condition only triggers a :class:`DelzantWarning`.
    """
    v = np.asarray(points, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise PolytopeValidationError("need at least 3 planar points")
    if polygon_area(v) < 0:
        v = v[::-1].copy()
    area = polygon_area(v)
    scale = max(np.abs(v).max(), 1.0)
    if area <= GEOM_TOL * scale**2:
        raise PolytopeValidationError("degenerate polygon (zero area)")
    m = len(v)
    for i in range(m):
        a, b, c = v[i], v[(i + 1) % m], v[(i + 2) % m]
        cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        if cross <= GEOM_TOL * scale**2:
            raise PolytopeValidationError(
                "vertices are not in strictly convex CCW order "
                f"(turn at vertex {(i + 1) % m} is not a left turn)"
            )

    edges = []
    for i in range(m):
        j = (i + 1) % m
        delta = v[j] - v[i]
        prim = _primitive_direction(delta)
        # inward normal for CCW orientation is the left rotation of the direction
        normal = np.array([-prim[1], prim[0]])
        offset = float(normal @ v[i])
        elen = float(np.linalg.norm(delta))
        edges.append(
            Edge(
                start=i,
                end=j,
                direction=(int(prim[0]), int(prim[1])),
                normal=(int(normal[0]), int(normal[1])),
                offset=offset,
                lattice_length=elen / float(np.linalg.norm(prim)),
                euclidean_length=elen,
            )
        )

    delzant_ok = []
    for i in range(m):
        d_out = np.array(edges[i].direction)
        d_in = np.array(edges[i - 1].direction)
        det = d_out[0] * (-d_in[1]) - d_out[1] * (-d_in[0])
        delzant_ok.append(abs(det) == 1)
    if not all(delzant_ok):
        bad = [i for i, ok in enumerate(delzant_ok) if not ok]
        warnings.warn(
            f"vertices {bad} violate the Delzant condition", DelzantWarning, stacklevel=2
        )
    return Polytope2(v, edges, delzant_ok)


def delta_p(p: float) -> Polytope2:
    """Quadrilateral with vertices (0,0), (p,0), (p,1-p), (0,1), 0 < p < 1.

    This is the moment polytope of the one-point blow-up of CP^2 (the
    slanted edge has primitive direction (-1,1) and lattice length p).
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must be in (0,1), got {p}")
    return from_vertices([(0.0, 0.0), (p, 0.0), (p, 1.0 - p), (0.0, 1.0)])


def load_polytope_json(path) -> Polytope2:
    """Read {"vertices": [[x,y], ...]} from a JSON file."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict) or "vertices" not in data:
        raise PolytopeValidationError(f"{path}: expected an object with a 'vertices' key")
    return from_vertices(data["vertices"])


def is_positive_on(f: AffineFn2, polytope: Polytope2) -> bool:
    """True iff f > 0 strictly at every vertex (hence on the whole polygon)."""
    return f.min_on(polytope) > 0.0


@dataclass(frozen=True)
class SPLFn:
    """Simple piecewise linear convex function max{L, 0}.

    ``crease`` is the closed chord {L = 0} intersected with the polygon when
    that chord meets the interior with positive length, else None.
    """

    L: AffineFn2
    crease: tuple | None = None

    def __call__(self, pts):
        return np.maximum(self.L(pts), 0.0)

    @staticmethod
    def from_affine(L: AffineFn2, polytope: Polytope2) -> "SPLFn":
        seg = crease_segment(L, polytope)
        crease = None
        if seg is not None:
            crease = (
                (float(seg[0, 0]), float(seg[0, 1])),
                (float(seg[1, 0]), float(seg[1, 1])),
            )
        return SPLFn(L, crease)

    @property
    def has_crease(self) -> bool:
        return self.crease is not None


def crease_segment(L: AffineFn2, polytope: Polytope2):
    """Chord {L = 0} clipped to the polygon, if it meets the interior.

    Returns a (2,2) array of endpoints or None (line misses the polygon,
    touches only a vertex, or runs along a boundary edge).
    """
    grad = L.gradient
    gnorm = float(np.linalg.norm(grad))
    if gnorm < GEOM_TOL:
        raise DomainError("crease of a constant function is undefined")
    # base point: closest point of {L=0} to the centroid; chord direction
    c = polytope.centroid
    base = c - (L(c) / gnorm**2) * grad
    direction = np.array([-grad[1], grad[0]]) / gnorm
    lo, hi = -np.inf, np.inf
    nu, lam = polytope.edge_functions()
    for k in range(len(nu)):
        a = float(nu[k] @ direction)
        b = float(nu[k] @ base - lam[k])
        # half-plane constraint: b + t*a >= 0
        if abs(a) < GEOM_TOL:
            if b < -GEOM_TOL * max(1.0, polytope.diameter()):
                return None
            continue
        t = -b / a
        if a > 0:
            lo = max(lo, t)
        else:
            hi = min(hi, t)
    if not np.isfinite(lo) or not np.isfinite(hi):
        return None
    if hi - lo <= GEOM_TOL * max(1.0, polytope.diameter()):
        return None
    p0, p1 = base + lo * direction, base + hi * direction
    mid = 0.5 * (p0 + p1)
    ell_mid = mid @ nu.T - lam
    if np.min(ell_mid) <= GEOM_TOL * max(1.0, polytope.diameter()):
        return None  # chord lies on the boundary or touches only a vertex
    seg = np.array([p0, p1])
    order = np.lexsort((seg[:, 1], seg[:, 0]))
    return seg[order]


def split_along(polytope: Polytope2, L: AffineFn2):
    """Clip the polygon by the half planes {L >= 0} and {L <= 0}.

    Returns a pair (positive piece, negative piece) of CCW vertex arrays;
    a side that is empty or degenerate is None.  Areas add up to the
    polygon area.
    """
    pos = clip_polygon(polytope.vertices, L, keep_positive=True)
    neg = clip_polygon(polytope.vertices, L, keep_positive=False)
    return pos, neg


def clip_polygon(vertices, L: AffineFn2, keep_positive: bool = True):
    """Sutherland-Hodgman clip of a convex CCW polygon by {L >= 0} (or <= 0)."""
    v = np.asarray(vertices, dtype=float)
    vals = L(v)
    if not keep_positive:
        vals = -vals
    scale = max(1.0, float(np.abs(vals).max()))
    out = []
    m = len(v)
    for i in range(m):
        j = (i + 1) % m
        vi, vj = vals[i], vals[j]
        if vi >= 0:
            out.append(v[i])
        if (vi > 0 > vj) or (vi < 0 < vj):
            t = vi / (vi - vj)
            out.append(v[i] + t * (v[j] - v[i]))
    if len(out) < 3:
        return None
    out = np.array(out)
    # drop near-duplicate consecutive points produced by vertices on the line
    keep = [0]
    ref = max(1.0, float(np.abs(out).max()))
    for i in range(1, len(out)):
        if np.linalg.norm(out[i] - out[keep[-1]]) > GEOM_TOL * ref:
            keep.append(i)
    if len(keep) > 1 and np.linalg.norm(out[keep[-1]] - out[keep[0]]) <= GEOM_TOL * ref:
        keep.pop()
    out = out[keep]
    if len(out) < 3 or polygon_area(out) <= GEOM_TOL * ref**2:
        return None
    return out


def unimodular_transform(polytope: Polytope2, U, t=(0.0, 0.0)) -> Polytope2:
    """Image polytope under x -> U x + t for an integer matrix with det +-1.

    Lattice edge lengths (and hence the lattice perimeter) are preserved.
    """
    U = np.asarray(U)
    if U.shape != (2, 2) or not np.all(U == np.round(U)):
        raise DomainError("U must be a 2x2 integer matrix")
    det = int(round(U[0, 0] * U[1, 1] - U[0, 1] * U[1, 0]))
    if abs(det) != 1:
        raise DomainError(f"U must be unimodular (|det| = 1), got det = {det}")
    new = polytope.vertices @ np.asarray(U, dtype=float).T + np.asarray(t, dtype=float)
    return from_vertices(new)


def pullback_affine(f: AffineFn2, U, t=(0.0, 0.0)) -> AffineFn2:
    """Affine function g with g(U x + t) = f(x), i.e. g = f o (U, t)^{-1}."""
    U = np.asarray(U, dtype=float)
    Uinv = np.linalg.inv(U)
    grad = Uinv.T @ f.gradient
    const = f.c - grad @ np.asarray(t, dtype=float)
    return AffineFn2(float(grad[0]), float(grad[1]), float(const))
