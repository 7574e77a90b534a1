"""Canonical symplectic-potential calculus on a Delzant polygon.

The canonical (Guillemin) potential of a polygon with lattice-normalized edge
functions ell_k(mu) = <nu_k, mu> - lam_k is

    u = 1/2 sum_k ell_k log ell_k,

whose Hessian G, inverse H and derivatives of H all have closed forms:

    G          = 1/2 sum nu_k nu_k^T / ell_k
    d_a G      = -1/2 sum (nu_k)_a nu_k nu_k^T / ell_k^2
    d_a d_b G  =      sum (nu_k)_a (nu_k)_b nu_k nu_k^T / ell_k^3
    d_a H      = -H (d_a G) H
    d_b d_a H  = -(d_b H)(d_a G) H - H (d_b d_a G) H - H (d_a G)(d_b H)

and the scalar curvature is s_J = -sum_{ij} H_{ij,ij}.  No numerical
differentiation anywhere in this module; finite differences appear only in
the test suite as oracles.

On top of the samples sit the pointwise weighted curvature s_{J,f,k,n}, its
divergence-form reduction (which exists exactly for k = -2), and quadrature
residuals for the integration-by-parts identity that turns the weighted
curvature integral into the boundary term of the Futaki functional.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .polytope import AffineFn2, Polytope2
from .quadrature import PolyWeight, as_weight, integrate_boundary, integrate_field


@dataclass(frozen=True)
class CurvatureSample:
    """Canonical-potential data at one interior point.

    Index conventions: ``dH[a, i, j]`` is d_a H_ij and ``d2H[a, b, i, j]`` is
    d_a d_b H_ij, so the scalar curvature is -sum_ij d2H[i, j, i, j].
    """

    point: np.ndarray
    G: np.ndarray
    H: np.ndarray
    dH: np.ndarray
    d2H: np.ndarray
    s_J: float


def canonical_arrays(polytope: Polytope2, pts):
    """Batched (G, H, dH, d2H, s_J) at interior points; shapes (N,2,2) etc.

    Raises a domain error if any point is on or outside the boundary.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    nu, lam = polytope.edge_functions()
    ell = pts @ nu.T - lam  # (N, E)
    if np.min(ell) <= 0.0:
        n_bad, _ = np.unravel_index(int(np.argmin(ell)), ell.shape)
        p = pts[n_bad]
        raise DomainError(
            f"point ({p[0]:.6g}, {p[1]:.6g}) is not strictly interior"
        )
    inv1 = 1.0 / ell
    inv2 = inv1 * inv1
    inv3 = inv2 * inv1
    G = 0.5 * np.einsum("ka,kb,nk->nab", nu, nu, inv1)
    dG = -0.5 * np.einsum("ka,kb,kc,nk->nabc", nu, nu, nu, inv2)
    d2G = np.einsum("ka,kb,kc,kd,nk->nabcd", nu, nu, nu, nu, inv3)
    H = np.linalg.inv(G)
    dH = -np.einsum("nij,najk,nkl->nail", H, dG, H)
    d2H = (
        -np.einsum("nbij,najk,nkl->nabil", dH, dG, H)
        - np.einsum("nij,nabjk,nkl->nabil", H, d2G, H)
        - np.einsum("nij,najk,nbkl->nabil", H, dG, dH)
    )
    s_J = -np.einsum("nijij->n", d2H)
    return G, H, dH, d2H, s_J


def canonical_sample(polytope: Polytope2, mu) -> CurvatureSample:
    """Closed-form curvature data of the canonical potential at one point."""
    mu = np.asarray(mu, dtype=float)
    G, H, dH, d2H, s_J = canonical_arrays(polytope, mu[None, :])
    return CurvatureSample(mu, G[0], H[0], dH[0], d2H[0], float(s_J[0]))


def scalar_curvature_field(polytope: Polytope2):
    """Pointwise s_J as a batched field, suitable for integrate_field."""

    def field(pts):
        return canonical_arrays(polytope, pts)[4]

    return field


# ---------------------------------------------------------------------------
# weighted curvature


def _check_weights(k: float, n: float):
    if k == 0.0:
        raise DomainError("conformal weight k must be nonzero")
    if float(n) in (0.0, 1.0, 2.0):
        raise DomainError(f"weight n must avoid 0, 1, 2; got {n}")


def weighted_curvature_terms(polytope: Polytope2, pts, f: AffineFn2):
    """The three pointwise contractions entering the weighted curvature.

    Returns (T1, T2, T3) with T1 = sum H_ij,ij, T2 = sum f_,i H_ij,j and
    T3 = sum f_,i f_,j H_ij, each of shape (N,).
    """
    _, H, dH, d2H, _ = canonical_arrays(polytope, pts)
    grad = f.gradient
    t1 = np.einsum("nijij->n", d2H)
    t2 = np.einsum("i,njij->n", grad, dH)
    t3 = np.einsum("i,j,nij->n", grad, grad, H)
    return t1, t2, t3


def weighted_scalar_curvature(polytope: Polytope2, mu, f: AffineFn2, k: float, n: float):
    """Pointwise (g_J, f, k, n)-scalar curvature

        s = -f^-k sum_ij { H_ij,ij + (k(n-1)/f) f_,i H_ij,j
                           + (k(n-1)/f^2)(k(n-2)/4 - 1) f_,i f_,j H_ij }.

    Accepts a single point or an (N, 2) batch.
    """
    _check_weights(k, n)
    pts = np.atleast_2d(np.asarray(mu, dtype=float))
    fv = f(pts)
    if np.min(fv) <= 0.0:
        raise DomainError("potential must be positive at the sample points")
    t1, t2, t3 = weighted_curvature_terms(polytope, pts, f)
    kn1 = k * (n - 1.0)
    s = -(fv ** (-k)) * (
        t1 + kn1 / fv * t2 + kn1 / fv**2 * (k * (n - 2.0) / 4.0 - 1.0) * t3
    )
    return float(s[0]) if np.asarray(mu).ndim == 1 else s


def weighted_scalar_curvature_via_laplacian(
    polytope: Polytope2, mu, f: AffineFn2, k: float, n: float
):
    """Same curvature assembled through the conformal-factor Laplacian:

        s = f^-k s_J + (4(n-1)/(n-2)) f^(-k(n+2)/4) Lap_J f^(k(n-2)/4),

    with Lap_J of a power of an affine function in closed form.  Used as an
    independent assembly for consistency tests.
    """
    _check_weights(k, n)
    pts = np.atleast_2d(np.asarray(mu, dtype=float))
    fv = f(pts)
    _, H, dH, d2H, s_J = canonical_arrays(polytope, pts)
    e = k * (n - 2.0) / 4.0
    grad = f.gradient
    t2 = np.einsum("i,njij->n", grad, dH)
    t3 = np.einsum("i,j,nij->n", grad, grad, H)
    lap = -e * fv**e * ((e - 1.0) / fv**2 * t3 + t2 / fv)
    s = fv ** (-k) * s_J + 4.0 * (n - 1.0) / (n - 2.0) * fv ** (-k * (n + 2.0) / 4.0) * lap
    return float(s[0]) if np.asarray(mu).ndim == 1 else s


def laplacian(polytope: Polytope2, pts, phi_grad, phi_hess):
    """Lap_J phi = -sum { phi_,ij H_ij + phi_,i H_ij,j } for constant phi data.

    ``phi_grad`` (2,) and ``phi_hess`` (2,2) describe a quadratic phi; for a
    general smooth phi evaluate the formula per point instead.
    """
    _, H, dH, _, _ = canonical_arrays(polytope, pts)
    term1 = np.einsum("ij,nij->n", np.asarray(phi_hess, dtype=float), H)
    term2 = np.einsum("i,njij->n", np.asarray(phi_grad, dtype=float), dH)
    return -(term1 + term2)


# ---------------------------------------------------------------------------
# divergence form


def hessian_divergence(polytope: Polytope2, pts, f: AffineFn2, alpha: float):
    """Pointwise sum_ij (f^alpha H_ij)_,ij, expanded by the product rule:

        f^alpha sum { H_ij,ij + (2 alpha/f) f_,i H_ij,j
                      + (alpha(alpha-1)/f^2) f_,i f_,j H_ij }.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    fv = f(pts)
    if np.min(fv) <= 0.0:
        raise DomainError("potential must be positive at the sample points")
    t1, t2, t3 = weighted_curvature_terms(polytope, pts, f)
    return fv**alpha * (
        t1 + 2.0 * alpha / fv * t2 + alpha * (alpha - 1.0) / fv**2 * t3
    )


def divergence_form_residual(polytope: Polytope2, mu, f: AffineFn2, k: float, n: float):
    """Mismatch of the divergence-form reduction at general (k, n).

    The candidate exponent alpha = k(n-1)/2 makes the middle terms of
    s_{J,f,k,n} * f^(k+alpha) and -sum (f^alpha H_ij)_,ij agree; the
    remaining coefficient gap alpha(alpha-1) vs k(n-1)(k(n-2)/4 - 1)
    closes exactly when k = -2 (then alpha = 1-n).  Returns the pointwise
    difference s * f^(k+alpha) + sum (f^alpha H_ij)_,ij, which is zero for
    k = -2 and nonzero in general.
    """
    _check_weights(k, n)
    pts = np.atleast_2d(np.asarray(mu, dtype=float))
    alpha = k * (n - 1.0) / 2.0
    fv = f(pts)
    s = weighted_scalar_curvature(polytope, pts, f, k, n)
    res = s * fv ** (k + alpha) + hessian_divergence(polytope, pts, f, alpha)
    return float(res[0]) if np.asarray(mu).ndim == 1 else res


# ---------------------------------------------------------------------------
# integral identities


def interior_margin(polytope: Polytope2, fraction: float = 1e-3) -> float:
    """A boundary margin: the given fraction of the centroid-to-edge distance."""
    nu, lam = polytope.edge_functions()
    c = polytope.centroid
    dists = (nu @ c - lam) / np.linalg.norm(nu, axis=1)
    return fraction * float(np.min(dists))


def integration_by_parts_residual(
    polytope: Polytope2, f: AffineFn2, n: float, phi, tol: float = 1e-9
) -> float:
    """Residual of moving the double divergence onto the test function:

        int_D phi sum (f^(1-n) H_ij)_,ij dmu
            = int_D f^(1-n) sum H_ij phi_,ij dmu - 2 int_dD f^(1-n) phi dsigma.

    Interior terms use margin-extrapolated quadrature (the integrands are
    only available pointwise); the boundary term is exact quadrature.
    Returns LHS - RHS; the identity holds for polynomial phi of degree <= 2.
    """
    w = as_weight(phi)
    if not isinstance(w, PolyWeight):
        raise DomainError("integration-by-parts residual needs a polynomial weight")
    margin = interior_margin(polytope)
    alpha = 1.0 - n

    def lhs_field(pts):
        return w(pts) * hessian_divergence(polytope, pts, f, alpha)

    lhs = integrate_field(polytope, lhs_field, tol, boundary_margin=margin).value

    c = list(w.coeffs) + [0.0] * (6 - len(w.coeffs))
    phi_hess = np.array([[2.0 * c[3], c[4]], [c[4], 2.0 * c[5]]])

    def rhs_field(pts):
        _, H, _, _, _ = canonical_arrays(polytope, pts)
        return f(pts) ** alpha * np.einsum("ij,nij->n", phi_hess, H)

    rhs_interior = integrate_field(polytope, rhs_field, tol, boundary_margin=margin).value
    rhs_boundary = integrate_boundary(polytope, w, f, alpha, tol).value
    return lhs - (rhs_interior - 2.0 * rhs_boundary)
