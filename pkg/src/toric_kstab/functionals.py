"""Weighted-volume functionals of a positive affine potential on a polygon.

For a Killing potential f = a*mu1 + b*mu2 + c > 0 on a Delzant polygon and a
weight parameter n (with the conformal weight fixed to k = -2), this module
evaluates

    vol          = int_D f^-n dmu
    total_scalar = 2 int_dD f^(2-n) dsigma
    c_const      = 2 int_dD f^(1-n) dsigma / int_D f^(-1-n) dmu
    d_const      = total_scalar / vol
    futaki(phi)  = 2 int_dD f^(1-n) phi dsigma - c_const int_D f^(-1-n) phi dmu
    eh           = total_scalar / vol^((n-2)/n)
    df(phi)      = futaki extended to convex piecewise linear phi

together with the first and second derivatives of eh in the coefficients
(a, b, c), which drive the critical-point search.  Everything reduces to
polygon moments int f^alpha * m dmu and int_dD f^alpha * m dsigma for
monomials m of degree <= 2; a context object computes each alpha-block of
six moments in one adaptive pass and memoizes it.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError
from .polytope import AffineFn2, Polytope2, SPLFn, is_positive_on
from .quadrature import (
    DEFAULT_TOL,
    QuadResult,
    integrate_boundary,
    integrate_interior,
    polygon_integrals,
    segment_integrals,
)

# monomial basis shared with quadrature.PolyWeight: 1, x, y, x^2, x*y, y^2
_NB = 6


def _basis_values(pts):
    x, y = pts[:, 0], pts[:, 1]
    return np.stack([np.ones_like(x), x, y, x * x, x * y, y * y], axis=1)


def _affine_coeff_vec(phi: AffineFn2) -> np.ndarray:
    """Coefficients of phi against the monomial basis."""
    return np.array([phi.c, phi.a, phi.b, 0.0, 0.0, 0.0])


def _product_matrix(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Basis coefficients of the product of two affine-coefficient vectors.

    Given u, v supported on (1, x, y), returns the (6,) coefficients of the
    degree-2 product.
    """
    out = np.zeros(_NB)
    out[0] = u[0] * v[0]
    out[1] = u[0] * v[1] + u[1] * v[0]
    out[2] = u[0] * v[2] + u[2] * v[0]
    out[3] = u[1] * v[1]
    out[4] = u[1] * v[2] + u[2] * v[1]
    out[5] = u[2] * v[2]
    return out


class FunctionalContext:
    """A polygon, a positive affine potential, and a weight n, with moment cache.

    ``n`` must avoid {0, 1, 2}, where the weighted-curvature normalizations
    degenerate.  All integrals are evaluated to the context tolerance.
    ``sigma`` selects the boundary measure: "lattice" (default, primitive
    lattice step = length 1) or "euclidean" arc length.
    """

    def __init__(
        self,
        polytope: Polytope2,
        f: AffineFn2,
        n: float,
        tol: float = DEFAULT_TOL,
        sigma: str = "lattice",
    ):
        if not isinstance(polytope, Polytope2):
            polytope = _as_polytope(polytope)
        if not is_positive_on(f, polytope):
            raise DomainError(
                f"potential ({f.a}, {f.b}, {f.c}) is not strictly positive on {polytope}"
            )
        if float(n) in (0.0, 1.0, 2.0):
            raise DomainError(f"weight n must avoid 0, 1, 2; got {n}")
        if not tol > 0:
            raise DomainError("tol must be positive")
        if sigma not in ("lattice", "euclidean"):
            raise DomainError(f"sigma must be 'lattice' or 'euclidean', got {sigma!r}")
        self.polytope = polytope
        self.f = f
        self.n = float(n)
        self.tol = float(tol)
        self.sigma = sigma
        self._interior: dict = {}
        self._boundary: dict = {}

    # -- moment blocks -------------------------------------------------

    def interior_moments(self, alpha: float) -> np.ndarray:
        """(6,) vector of int_D f^alpha * m dmu over the monomial basis."""
        key = float(alpha)
        if key not in self._interior:
            f = self.f

            def fn(pts):
                return _basis_values(pts) * f(pts)[:, None] ** key

            values, _, _ = polygon_integrals(self.polytope.vertices, fn, self.tol)
            self._interior[key] = values
        return self._interior[key]

    def boundary_moments(self, alpha: float) -> np.ndarray:
        """(6,) vector of int_dD f^alpha * m dsigma in the context measure."""
        key = float(alpha)
        if key not in self._boundary:
            f = self.f
            edge_tol = self.tol / self.polytope.num_vertices
            total = np.zeros(_NB)
            for e in self.polytope.edges:
                start = self.polytope.vertices[e.start]
                direction = np.asarray(e.direction, dtype=float)

                def fn_t(ts, _s=start, _d=direction):
                    pts = _s[None, :] + ts[:, None] * _d[None, :]
                    return _basis_values(pts) * f(pts)[:, None] ** key

                values, _, _ = segment_integrals(e.lattice_length, fn_t, edge_tol)
                if self.sigma == "euclidean":
                    values = values * (e.euclidean_length / e.lattice_length)
                total += values
            self._boundary[key] = total
        return self._boundary[key]


def _as_polytope(obj) -> Polytope2:
    from .polytope import from_vertices

    return from_vertices(obj)


# ---------------------------------------------------------------------------
# the k = -2 functionals


def vol(ctx: FunctionalContext) -> float:
    return float(ctx.interior_moments(-ctx.n)[0])


def total_scalar(ctx: FunctionalContext) -> float:
    return 2.0 * float(ctx.boundary_moments(2.0 - ctx.n)[0])


def c_const(ctx: FunctionalContext) -> float:
    return 2.0 * float(ctx.boundary_moments(1.0 - ctx.n)[0]) / float(
        ctx.interior_moments(-1.0 - ctx.n)[0]
    )


def d_const(ctx: FunctionalContext) -> float:
    return total_scalar(ctx) / vol(ctx)


def futaki(ctx: FunctionalContext, phi: AffineFn2) -> float:
    """Obstruction functional on affine test functions; zero on constants."""
    pvec = _affine_coeff_vec(phi)
    b = float(ctx.boundary_moments(1.0 - ctx.n) @ pvec)
    m = float(ctx.interior_moments(-1.0 - ctx.n) @ pvec)
    return 2.0 * b - c_const(ctx) * m


def eh(ctx: FunctionalContext) -> float:
    """Normalized total curvature S / Vol^((n-2)/n); degree-0 homogeneous in f."""
    return total_scalar(ctx) / vol(ctx) ** ((ctx.n - 2.0) / ctx.n)


def df(ctx: FunctionalContext, phi) -> float:
    """Donaldson-Futaki value on a convex piecewise linear test function.

    Affine phi reduce exactly to :func:`futaki`; simple piecewise linear
    max{L, 0} splits the domain along the crease.
    """
    if isinstance(phi, AffineFn2):
        return futaki(ctx, phi)
    if not isinstance(phi, SPLFn):
        raise DomainError(f"df needs an affine or simple piecewise linear phi, got {phi!r}")
    b = integrate_boundary(ctx.polytope, phi, ctx.f, 1.0 - ctx.n, ctx.tol, measure=ctx.sigma)
    m = integrate_interior(ctx.polytope, phi, ctx.f, -1.0 - ctx.n, ctx.tol)
    return 2.0 * b.value - c_const(ctx) * m.value


def df_pair(ctx: FunctionalContext, phi: SPLFn) -> tuple:
    """(df(max{L,0}), df(max{-L,0})) sharing one crease split.

    Uses max{L,0} - max{-L,0} = L, so the opposite orientation follows from
    one adaptive evaluation plus the (memoized) affine moments.
    """
    pos = df(ctx, phi)
    return pos, pos - futaki(ctx, phi.L)


def eh_gradient(ctx: FunctionalContext) -> np.ndarray:
    """Gradient of eh in the potential coefficients (a, b, c).

    Differentiating under the integral sign: with B = int_dD f^(2-n) dsigma,
    V = int_D f^-n dmu and q = (n-2)/n,

        d(eh)/dt along e = (2/V^q) * (n-2) * (B/V * int f^(-1-n) e dmu
                                             - int_dD f^(1-n) e dsigma).
    """
    n = ctx.n
    q = (n - 2.0) / n
    b = float(ctx.boundary_moments(2.0 - n)[0])
    v = float(ctx.interior_moments(-n)[0])
    # order (a, b, c) corresponds to directions mu1, mu2, 1
    dirs = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    bmom = ctx.boundary_moments(1.0 - n)[:3]
    mmom = ctx.interior_moments(-1.0 - n)[:3]
    grad = np.empty(3)
    for i, e in enumerate(dirs):
        be = float(bmom @ e)
        me = float(mmom @ e)
        grad[i] = 2.0 * (n - 2.0) / v**q * (b * me / v - be)
    return grad


def eh_directional_derivative(ctx: FunctionalContext, direction: AffineFn2) -> float:
    """Derivative of eh at f along f + t*direction, evaluated at t = 0."""
    g = eh_gradient(ctx)
    return float(g @ np.array([direction.a, direction.b, direction.c]))


def eh_hessian(ctx: FunctionalContext) -> np.ndarray:
    """Closed-form 3x3 Hessian of eh in (a, b, c).

    With B(f) = int_dD f^(2-n) dsigma and V(f) = int_D f^-n dmu,

        B_i  = (2-n) int_dD f^(1-n) e_i,    B_ij = (2-n)(1-n) int_dD f^-n e_i e_j,
        V_i  = -n int_D f^(-1-n) e_i,       V_ij = n(n+1) int_D f^(-n-2) e_i e_j,

    and eh = 2 B V^-q differentiates by the product rule.  By degree-0
    homogeneity the Hessian satisfies Hess @ (a,b,c) = -grad.
    """
    n = ctx.n
    q = (n - 2.0) / n
    coeff_dirs = [
        np.array([0.0, 1.0, 0.0]),  # d/da -> direction mu1
        np.array([0.0, 0.0, 1.0]),  # d/db -> direction mu2
        np.array([1.0, 0.0, 0.0]),  # d/dc -> direction 1
    ]
    b0 = float(ctx.boundary_moments(2.0 - n)[0])
    v0 = float(ctx.interior_moments(-n)[0])
    bm1 = ctx.boundary_moments(1.0 - n)
    vm1 = ctx.interior_moments(-1.0 - n)
    bm2 = ctx.boundary_moments(-n)
    vm2 = ctx.interior_moments(-n - 2.0)

    bi = np.array([(2.0 - n) * float(bm1[:3] @ e) for e in coeff_dirs])
    vi = np.array([-n * float(vm1[:3] @ e) for e in coeff_dirs])
    bij = np.empty((3, 3))
    vij = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            prod = _product_matrix(coeff_dirs[i], coeff_dirs[j])
            bij[i, j] = (2.0 - n) * (1.0 - n) * float(bm2 @ prod)
            vij[i, j] = n * (n + 1.0) * float(vm2 @ prod)

    vq = v0**q
    hess = (
        2.0 * bij / vq
        - 2.0 * q / vq / v0 * (np.outer(bi, vi) + np.outer(vi, bi))
        + 2.0 * q * (q + 1.0) * b0 / vq / v0**2 * np.outer(vi, vi)
        - 2.0 * q * b0 / vq / v0 * vij
    )
    return hess


def quad_diagnostics(ctx: FunctionalContext) -> dict:
    """Error estimates of the basic integrals, for reporting."""
    out = {}
    for name, alpha, boundary in [
        ("vol", -ctx.n, False),
        ("total_scalar", 2.0 - ctx.n, True),
    ]:
        if boundary:
            r: QuadResult = integrate_boundary(
                ctx.polytope, None, ctx.f, alpha, ctx.tol, measure=ctx.sigma
            )
        else:
            r = integrate_interior(ctx.polytope, None, ctx.f, alpha, ctx.tol)
        out[name] = {"value": r.value, "error": r.error_estimate, "cells": r.subdivisions}
    return out
