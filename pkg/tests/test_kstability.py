import json

import numpy as np
import pytest

from toric_kstab.errors import DomainError
from toric_kstab.functionals import FunctionalContext, futaki
from toric_kstab.kstability import (
    CreaseCase,
    df_scan,
    emit_scan_csv,
    enumerate_crease_cases,
    read_scan_csv,
    scan_csv_text,
    stability_verdict,
    verdict_report,
)
from toric_kstab.polytope import AffineFn2, delta_p, from_vertices

SQUARE = from_vertices([[0, 0], [1, 0], [1, 1], [0, 1]])
ONE = AffineFn2(0.0, 0.0, 1.0)
# a stationary potential on the p = 0.1 blow-up (minus branch of family (c))
F_CRIT = AffineFn2(-3.2087807854737305, -3.1975615709474616, 3.388780785473731)


def test_enumerate_cases_blowup():
    cases = enumerate_crease_cases(delta_p(0.1))
    assert [c.case_id for c in cases] == ["0-1", "0-2", "0-3", "1-2", "1-3", "2-3"]
    ranges = {c.case_id: np.ravel(c.param_ranges) for c in cases}
    # parameter ranges are the lattice lengths of the paired edges
    assert np.allclose(ranges["0-1"], [0.0, 0.1, 0.0, 0.9])
    assert np.allclose(ranges["2-3"], [0.0, 0.1, 0.0, 1.0])


def test_crease_case_build():
    case = enumerate_crease_cases(SQUARE)[1]  # bottom edge with top edge
    assert case.edge_pair == (0, 2)
    phi_pos, phi_neg = case.build(0.5, 0.5)
    assert phi_pos.has_crease and phi_neg.has_crease
    # unit gradient normalization
    assert np.linalg.norm(phi_pos.L.gradient) == pytest.approx(1.0)
    assert np.linalg.norm(phi_neg.L.gradient) == pytest.approx(1.0)
    # both vanish on the shared crease
    u, v = np.array(phi_pos.crease)
    mid = 0.5 * (u + v)
    assert abs(phi_pos.L(mid)) < 1e-12
    assert abs(phi_neg.L(mid)) < 1e-12
    # coincident endpoints cannot support a crease direction
    corner_case = enumerate_crease_cases(SQUARE)[0]  # adjacent edges 0 and 1
    assert corner_case.build(1.0, 0.0) is None


def test_df_scan_structure():
    poly = delta_p(0.1)
    case = enumerate_crease_cases(poly)[4]  # opposite edges 1 and 3
    table = df_scan(poly, F_CRIT, 4.0, case, grid=4)
    assert table.case_id == "1-3"
    assert len(table.nodes) == 16
    # e-major ordering with both parameters on uniform grids
    es = sorted({n.e for n in table.nodes})
    fs = sorted({n.f for n in table.nodes})
    assert np.allclose(es, np.linspace(0, 0.9, 4))
    assert np.allclose(fs, np.linspace(0, 1.0, 4))
    expect = [(e, f) for e in es for f in fs]
    assert [(n.e, n.f) for n in table.nodes] == pytest.approx(expect)
    assert all(n.valid for n in table.nodes)


def test_df_scan_threads_are_value_identical():
    poly = delta_p(0.1)
    case = enumerate_crease_cases(poly)[0]
    t1 = df_scan(poly, F_CRIT, 4.0, case, grid=4, threads=1)
    t2 = df_scan(poly, F_CRIT, 4.0, case, grid=4, threads=4)
    assert t1.nodes == t2.nodes  # bitwise equal floats, same order


def test_df_scan_rejects_tiny_grid():
    poly = delta_p(0.1)
    case = enumerate_crease_cases(poly)[0]
    with pytest.raises(DomainError):
        df_scan(poly, F_CRIT, 4.0, case, grid=1)


def test_orientations_differ_by_futaki():
    poly = delta_p(0.1)
    ctx = FunctionalContext(poly, F_CRIT, 4.0)
    case = enumerate_crease_cases(poly)[4]
    table = df_scan(poly, F_CRIT, 4.0, case, grid=3)
    for node in table.nodes:
        built = case.build(node.e, node.f)
        if built is None or not built[0].has_crease:
            continue
        fut = futaki(ctx, built[0].L)
        assert node.df_pos - node.df_neg == pytest.approx(fut, abs=1e-10)


def test_degenerate_nodes_are_affine_limits():
    # constant potential on the square: every Futaki value is zero, so the
    # no-crease nodes (chord collapsed onto an edge or vertex) must be ~0
    case = enumerate_crease_cases(SQUARE)[0]
    table = df_scan(SQUARE, ONE, 4.0, case, grid=3)
    degen = [n for n in table.nodes if n.degenerate]
    assert degen  # adjacent edge pair always has collapsed corners
    for n in degen:
        assert n.valid
        assert abs(n.df_pos) < 1e-10
        assert abs(n.df_neg) < 1e-10


def test_table_minimum_split():
    poly = delta_p(0.1)
    case = enumerate_crease_cases(poly)[0]
    table = df_scan(poly, F_CRIT, 4.0, case, grid=5)
    value, _, _, _ = table.minimum()
    ivalue, ie, jf, _ = table.interior_minimum()
    assert value <= ivalue
    # at a stationary potential the genuine creases stay strictly positive
    assert ivalue > 0
    # the reported location really is a nondegenerate node of the table
    match = [n for n in table.nodes if n.e == ie and n.f == jf]
    assert match and not match[0].degenerate


def test_csv_round_trip(tmp_path):
    poly = delta_p(0.1)
    cases = enumerate_crease_cases(poly)
    tables = [df_scan(poly, F_CRIT, 4.0, c, grid=3) for c in cases[:2]]
    text = scan_csv_text(tables)
    assert text.splitlines()[0] == "case,e,f,df_pos,df_neg,valid"
    path = tmp_path / "scan.csv"
    emit_scan_csv(tables, path)
    assert path.read_text() == text
    back = read_scan_csv(path)
    assert set(back) == {"0-1", "0-2"}
    for table in tables:
        rows = back[table.case_id]
        assert len(rows) == len(table.nodes)
        for row, node in zip(rows, table.nodes):
            assert row["e"] == pytest.approx(node.e, abs=1e-15)
            # 12 significant digits survive the round trip
            assert row["df_pos"] == pytest.approx(node.df_pos, rel=1e-11, abs=1e-21)
            assert row["valid"] == node.valid


def test_verdict_polystable_on_critical_potential():
    verdict = stability_verdict(delta_p(0.1), F_CRIT, 4.0, grid=5)
    assert verdict.status == "POLYSTABLE-EVIDENCE"
    assert verdict.witness is None
    assert verdict.minimum["value"] > verdict.tol > 0
    assert len(verdict.tables) == 6
    assert "evidence" in verdict.message


def test_verdict_unstable_on_constant_potential_blowup():
    # the blow-up polygon carries a nonzero Futaki obstruction at f = 1,
    # picked up through the affine limits of collapsed creases
    verdict = stability_verdict(delta_p(0.1), ONE, 4.0, grid=3)
    assert verdict.status == "UNSTABLE"
    assert verdict.witness is not None
    assert verdict.witness["value"] < -verdict.tol
    ctx = FunctionalContext(delta_p(0.1), ONE, 4.0)
    # the witness value is a genuine Futaki value, not noise
    assert abs(verdict.witness["value"]) > 1e-4


def test_verdict_polystable_on_square():
    verdict = stability_verdict(SQUARE, ONE, 4.0, grid=4)
    assert verdict.status == "POLYSTABLE-EVIDENCE"
    assert verdict.minimum["value"] > 0


def test_verdict_inconclusive_paths():
    # a grid too coarse to claim evidence
    v2 = stability_verdict(SQUARE, ONE, 4.0, grid=2)
    assert v2.status == "INCONCLUSIVE"
    # an absurdly demanding tolerance
    v3 = stability_verdict(SQUARE, ONE, 4.0, grid=3, tol=1e9)
    assert v3.status == "INCONCLUSIVE"


def test_verdict_report_is_json_ready():
    verdict = stability_verdict(delta_p(0.2), AffineFn2(0, 0, 2.0), 4.0, grid=3)
    report = verdict_report(delta_p(0.2), AffineFn2(0, 0, 2.0), 4.0, verdict)
    text = json.dumps(report)
    back = json.loads(text)
    assert back["verdict"] == verdict.status
    assert back["n"] == 4.0
    assert back["f"] == [0.0, 0.0, 2.0]
    assert len(back["cases"]) == 6
    for case in back["cases"]:
        assert set(case) >= {"case", "edge_pair", "grid", "grid_minimum", "interior_minimum"}
