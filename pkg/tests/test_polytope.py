import numpy as np
import pytest

from toric_kstab.errors import DomainError
from toric_kstab.polytope import (
    AffineFn2,
    Polytope2,
    SPLFn,
    crease_segment,
    delta_p,
    from_vertices,
    is_positive_on,
    load_polytope_json,
    pullback_affine,
    split_along,
    unimodular_transform,
)


def test_delta_p_vertices_and_measures():
    # hull of (0,0), (p,0), (p,1-p), (0,1); shoelace area p(2-p)/2,
    # lattice perimeter p + (1-p) + p + 1 = 2 + p
    for p in np.linspace(0.05, 0.95, 20):
        poly = delta_p(float(p))
        assert poly.num_vertices == 4
        assert np.allclose(poly.vertices, [[0, 0], [p, 0], [p, 1 - p], [0, 1]])
        assert abs(poly.area - p * (2 - p) / 2) < 1e-14
        assert abs(poly.lattice_perimeter - (2 + p)) < 1e-12


def test_delta_p_rejects_bad_p():
    for bad in (0.0, 1.0, 1.5, -0.2):
        with pytest.raises(DomainError):
            delta_p(bad)


def test_delta_p_is_delzant():
    # each vertex of the blow-up quadrilateral is a lattice-basis corner
    poly = delta_p(0.3)
    assert poly.is_delzant
    # a generic non-lattice slope breaks the Delzant condition
    with pytest.warns(UserWarning):
        skew = from_vertices([[0, 0], [2, 1.3], [0, 1]])
    assert not skew.is_delzant


def test_from_vertices_flips_clockwise_input():
    # clockwise hull order is accepted and reversed
    square = from_vertices([[0, 0], [0, 1], [1, 1], [1, 0]])
    assert abs(square.area - 1.0) < 1e-14
    v = square.vertices
    # positive signed area means the ordering came out counterclockwise
    signed = 0.5 * np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1])
    assert signed > 0
    # zig-zag input is not a convex hull ordering
    with pytest.raises(DomainError):
        from_vertices([[1, 1], [0, 0], [1, 0], [0, 1]])


def test_from_vertices_rejects_degenerate_input():
    with pytest.raises(DomainError):
        from_vertices([[0, 0], [1, 0]])
    with pytest.raises(DomainError):
        from_vertices([[0, 0], [1, 0], [2, 0]])  # collinear


def test_edge_functions_vanish_on_their_edges():
    poly = delta_p(0.4)
    nu, lam = poly.edge_functions()
    for k in range(poly.num_vertices):
        a = poly.vertices[k]
        b = poly.vertices[(k + 1) % poly.num_vertices]
        mid = 0.5 * (a + b)
        ell = mid @ nu.T - lam
        assert abs(ell[k]) < 1e-14
        # all other edge functions are strictly positive at this midpoint
        others = np.delete(ell, k)
        assert np.all(others > 0)
        # inward normal is primitive: integer entries with gcd 1
        assert np.allclose(nu[k], np.round(nu[k]))
        g = np.gcd(int(round(nu[k][0])), int(round(nu[k][1])))
        assert abs(g) == 1


def test_edge_point_parametrized_by_lattice_length():
    poly = delta_p(0.1)
    lens = [e.lattice_length for e in poly.edges]
    assert np.allclose(lens, [0.1, 0.9, 0.1, 1.0])
    # t is lattice arc length from the edge's first vertex
    assert np.allclose(poly.edge_point(0, 0.0), [0, 0])
    assert np.allclose(poly.edge_point(0, 0.1), [0.1, 0])
    assert np.allclose(poly.edge_point(2, 0.05), [0.05, 0.95])
    with pytest.raises(DomainError):
        poly.edge_point(0, 0.2)  # beyond the edge


def test_contains_and_centroid():
    poly = delta_p(0.5)
    assert poly.contains(poly.centroid)
    assert poly.contains([[0.1, 0.1], [0.4, 0.4]]).all()
    assert not poly.contains([0.6, 0.6])
    # margin shrinks the admissible region
    assert not poly.contains([1e-6, 0.5], margin=1e-3)


def test_affine_fn_evaluation_and_positivity():
    f = AffineFn2(1.0, -2.0, 0.5)
    assert f((1.0, 1.0)) == pytest.approx(-0.5)
    out = f(np.array([[0, 0], [1, 0], [0, 1]], dtype=float))
    assert np.allclose(out, [0.5, 1.5, -1.5])
    square = from_vertices([[0, 0], [1, 0], [1, 1], [0, 1]])
    assert is_positive_on(AffineFn2(0, 0, 0.1), square)
    assert not is_positive_on(AffineFn2(1, 0, 0), square)  # zero on an edge
    assert f.min_on(square) == pytest.approx(-1.5)


def test_crease_segment_cases():
    square = from_vertices([[0, 0], [1, 0], [1, 1], [0, 1]])
    # vertical chord through the middle
    seg = crease_segment(AffineFn2(1, 0, -0.5), square)
    assert seg is not None
    assert np.allclose(sorted(seg[:, 1]), [0, 1])
    assert np.allclose(seg[:, 0], 0.5)
    # line missing the square entirely
    assert crease_segment(AffineFn2(1, 0, -2.0), square) is None
    # line through a single vertex only
    assert crease_segment(AffineFn2(1, 1, 0), square) is None
    # line along a boundary edge: no interior crease
    assert crease_segment(AffineFn2(1, 0, 0), square) is None


def test_spl_from_affine():
    square = from_vertices([[0, 0], [1, 0], [1, 1], [0, 1]])
    phi = SPLFn.from_affine(AffineFn2(1, 0, -0.5), square)
    assert phi.has_crease
    assert phi((0.25, 0.5)) == 0.0
    assert phi((0.75, 0.5)) == pytest.approx(0.25)
    flat = SPLFn.from_affine(AffineFn2(1, 0, -2.0), square)
    assert not flat.has_crease
    assert np.all(flat(square.vertices) == 0.0)


def test_split_along_preserves_area():
    from toric_kstab.polytope import polygon_area

    rng = np.random.default_rng(7)
    poly = delta_p(0.35)
    for _ in range(100):
        a, b = rng.uniform(-1, 1, size=2)
        c = rng.uniform(-0.5, 0.5)
        pos, neg = split_along(poly, AffineFn2(a, b, c))
        total = sum(polygon_area(piece) for piece in (pos, neg) if piece is not None)
        assert abs(total - poly.area) < 1e-12


def test_unimodular_transform_roundtrip():
    U = np.array([[1, 1], [0, 1]])
    poly = delta_p(0.25)
    image = unimodular_transform(poly, U, t=(2.0, -1.0))
    assert abs(image.area - poly.area) < 1e-14
    assert abs(image.lattice_perimeter - poly.lattice_perimeter) < 1e-12
    assert image.is_delzant
    # pulled-back affine function agrees pointwise with the original
    f = AffineFn2(0.3, -0.7, 1.1)
    g = pullback_affine(f, U, t=(2.0, -1.0))
    pts = poly.vertices
    mapped = pts @ U.T + np.array([2.0, -1.0])
    assert np.allclose(g(mapped), f(pts))


def test_unimodular_transform_rejects_non_unimodular():
    with pytest.raises(DomainError):
        unimodular_transform(delta_p(0.25), np.array([[2, 0], [0, 1]]))


def test_load_polytope_json(tmp_path):
    path = tmp_path / "poly.json"
    path.write_text('{"vertices": [[0, 0], [1, 0], [0, 1]]}')
    poly = load_polytope_json(path)
    assert isinstance(poly, Polytope2)
    assert abs(poly.area - 0.5) < 1e-14
    bad = tmp_path / "bad.json"
    bad.write_text('{"points": [[0, 0]]}')
    with pytest.raises(DomainError):
        load_polytope_json(bad)
