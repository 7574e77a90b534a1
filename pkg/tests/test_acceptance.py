"""End-to-end acceptance checks, one per numbered criterion.

Each test prints exactly one [PASS]/[FAIL] line (visible under -s or on
failure) and asserts the same condition, with the tolerance stated inline.
"""

import csv
import json
import subprocess
import time

import numpy as np

from toric_kstab.criticalpoints import (
    _ALPHA_CACHE,
    closed_form_family,
    quartic_alpha,
    quartic_value,
)
from toric_kstab.functionals import FunctionalContext, d_const, futaki, vol
from toric_kstab.functionals import eh_gradient
from toric_kstab.kstability import enumerate_crease_cases
from toric_kstab.polytope import AffineFn2, delta_p, from_vertices
from toric_kstab.quadrature import integrate_boundary, integrate_interior
from toric_kstab.suites import run_suite

SIMPLEX = from_vertices([[0, 0], [1, 0], [0, 1]])
ONE = AffineFn2(0.0, 0.0, 1.0)

# grid interior minimum of the p=0.1 benchmark scan, frozen on the first
# validated run (case 0-3, e=0.003125, f=0.96875, positive orientation)
BENCHMARK_MINIMUM = 2.822326108266941e-06


def report(num, ok, text):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {text}"
    print(line)
    assert ok, line


def test_criterion_1_quartic_root():
    root = quartic_alpha()
    residual = abs(quartic_value(root))
    best = min(
        _timed_alpha() for _ in range(20)
    )
    ok = 0.0 < root < 1.0 and residual < 1e-10 and abs(root - 0.386) < 5e-4 and best < 1e-3
    report(
        1,
        ok,
        f"root {root:.10f} (target 0.386 +- 5e-4), |F(root)| = {residual:.2e} < 1e-10, "
        f"runtime {best * 1e6:.1f} us < 1 ms",
    )


def _timed_alpha():
    _ALPHA_CACHE.clear()
    t0 = time.perf_counter()
    quartic_alpha()
    return time.perf_counter() - t0


def _criticality_worsts(p_values, branches):
    """(worst gradient norm, worst relative Futaki residual, min of f) over
    the given family potentials, each normalized to unit coefficient norm."""
    worst_grad, worst_fut, min_f = 0.0, 0.0, np.inf
    basis = [ONE, AffineFn2(1, 0, 0), AffineFn2(0, 1, 0)]
    for p in p_values:
        poly = delta_p(p)
        for branch in branches:
            f = closed_form_family(p, branch)
            min_f = min(min_f, f.min_on(poly))
            if f.min_on(poly) <= 0.0:
                continue  # positivity failure is reported via min_f
            norm = float(np.linalg.norm([f.a, f.b, f.c]))
            unit = f.scaled(1.0 / norm)
            ctx = FunctionalContext(poly, unit, 4.0)
            worst_grad = max(worst_grad, float(np.linalg.norm(eh_gradient(ctx))))
            scale = abs(d_const(ctx)) * vol(ctx)
            worst_fut = max(
                worst_fut, max(abs(futaki(ctx, phi)) for phi in basis) / scale
            )
    return worst_grad, worst_fut, min_f


def test_criterion_2_family_c_criticality():
    t0 = time.perf_counter()
    worst_grad, worst_fut, min_f = _criticality_worsts(
        [0.05, 0.1, 0.2, 0.35], ["c_minus", "c_plus"]
    )
    elapsed = time.perf_counter() - t0
    ok = min_f > 0 and worst_grad < 1e-6 and worst_fut < 1e-6 and elapsed < 30.0
    report(
        2,
        ok,
        f"family (c) on p in {{0.05, 0.1, 0.2, 0.35}}: min f = {min_f:.4f} > 0, "
        f"grad norm {worst_grad:.2e} < 1e-6, Futaki residual {worst_fut:.2e} "
        f"< 1e-6 * |d| vol, runtime {elapsed:.1f} s < 30 s",
    )


def test_criterion_3_family_b_criticality():
    worst_grad, worst_fut, min_f = _criticality_worsts(
        [0.92, 0.95, 0.98], ["b_plus"]
    )
    ok = min_f > 0 and worst_grad < 1e-6 and worst_fut < 1e-6
    report(
        3,
        ok,
        f"family (b+) on p in {{0.92, 0.95, 0.98}}: min f = {min_f:.4f} > 0, "
        f"grad norm {worst_grad:.2e} < 1e-6, Futaki residual {worst_fut:.2e} "
        f"< 1e-6 * |d| vol",
    )


def test_criterion_4_benchmark_scan(tmp_path):
    out_csv = tmp_path / "scan.csv"
    out_report = tmp_path / "report.json"
    t0 = time.perf_counter()
    proc = subprocess.run(
        [
            "toric-kstab", "delta-p", "--p", "0.1", "df-scan",
            "--branch", "c_minus", "--n", "4", "--grid", "33",
            "--out", str(out_csv), "--report", str(out_report),
        ],
        capture_output=True,
        text=True,
        timeout=600,
    )
    elapsed = time.perf_counter() - t0
    assert proc.returncode == 0, proc.stderr
    rep = json.loads(out_report.read_text())

    # classify every CSV row by its crease geometry: nodes whose chord has
    # positive length inside the polygon are genuine test configurations,
    # collapsed nodes are affine limits whose exact value is a Futaki number
    poly = delta_p(0.1)
    cases = {c.case_id: c for c in enumerate_crease_cases(poly)}
    rows = list(csv.DictReader(open(out_csv)))
    genuine_min, degen_max = np.inf, 0.0
    for row in rows:
        built = cases[row["case"]].build(float(row["e"]), float(row["f"]))
        values = (float(row["df_pos"]), float(row["df_neg"]))
        if built is not None and built[0].has_crease:
            genuine_min = min(genuine_min, *values)
        else:
            degen_max = max(degen_max, *map(abs, values))

    interior = min(
        c["interior_minimum"]["value"] for c in rep["cases"]
    )
    ok = (
        elapsed < 300.0
        and len(rows) == 6534
        and rep["verdict"] == "POLYSTABLE-EVIDENCE"
        and genuine_min > 0.0
        and degen_max <= rep["tol"]
        and abs(interior - BENCHMARK_MINIMUM) < 1e-6 * BENCHMARK_MINIMUM
    )
    report(
        4,
        ok,
        f"grid-33 benchmark: {elapsed:.0f} s < 300 s, 6534 rows, verdict "
        f"{rep['verdict']}, min DF over creases {genuine_min:.3e} > 0, collapsed "
        f"nodes |DF| <= {degen_max:.1e} (tol {rep['tol']:.1e}), grid minimum "
        f"{interior:.9e} vs frozen {BENCHMARK_MINIMUM:.9e} (rel 1e-6)",
    )


def _suite_criterion(num, name):
    results = run_suite(name)
    ok = all(c.passed for c in results)
    detail = "; ".join(f"{c.name} worst {c.worst:.2e} (tol {c.tol:.0e})" for c in results)
    report(num, ok, f"suite `{name}` all {len(results)} checks pass: {detail}")


def test_criterion_5_identity_suite():
    _suite_criterion(5, "identities")


def test_criterion_6_abreu_suite():
    _suite_criterion(6, "abreu")


def test_criterion_7_slice_suite():
    _suite_criterion(7, "slice")


def test_criterion_8_quadrature_oracles():
    f = AffineFn2(1.0, 1.0, 1.0)
    interior = integrate_interior(SIMPLEX, None, f, -4.0).value
    boundary = integrate_boundary(SIMPLEX, None, f, -3.0).value
    err_i = abs(interior - 1.0 / 12.0) / (1.0 / 12.0)
    err_b = abs(boundary - 7.0 / 8.0) / (7.0 / 8.0)
    perim_err = max(
        abs(delta_p(float(p)).lattice_perimeter - (2.0 + float(p)))
        for p in np.linspace(0.04, 0.96, 20)
    )
    ok = err_i < 1e-10 and err_b < 1e-10 and perim_err < 1e-12
    report(
        8,
        ok,
        f"interior 1/12 rel err {err_i:.1e} < 1e-10, boundary 7/8 rel err "
        f"{err_b:.1e} < 1e-10, lattice perimeter 2+p exact to {perim_err:.1e} "
        f"on 20 values of p",
    )
