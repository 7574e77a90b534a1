import json
import subprocess
import sys

import pytest

from toric_kstab.cli import main


def run_cli(argv, capsys):
    """main() plus argparse SystemExit, normalized to (code, out, err)."""
    try:
        code = main(argv)
    except SystemExit as exc:
        code = int(exc.code or 0)
    out, err = capsys.readouterr()
    return code, out, err


def test_alpha(capsys):
    code, out, _ = run_cli(["alpha"], capsys)
    assert code == 0
    body = json.loads(out)
    assert abs(body["root"] - 0.386) < 5e-4
    assert abs(body["residual"]) < 1e-10
    assert "runtime_ms" not in body  # printed output stays rerun-identical
    # rerun gives the same bytes
    code2, out2, _ = run_cli(["alpha"], capsys)
    assert out2 == out


def test_help_exits_zero(capsys):
    code, out, _ = run_cli(["--help"], capsys)
    assert code == 0
    for word in ("alpha", "delta-p", "polytope", "verify", "serve"):
        assert word in out
    code, out, _ = run_cli(["delta-p", "--p", "0.1", "df-scan", "--help"], capsys)
    assert code == 0
    for flag in ("--branch", "--f", "--n", "--grid", "--out", "--report"):
        assert flag in out


def test_unknown_flag_exits_one(capsys):
    code, _, err = run_cli(["alpha", "--frobnicate"], capsys)
    assert code == 1
    assert "error" in err


def test_bad_p_exits_one(capsys):
    code, _, err = run_cli(["delta-p", "--p", "1.5", "critical"], capsys)
    assert code == 1
    assert "p must be in (0,1)" in err


def test_df_scan_writes_artifacts(tmp_path, capsys):
    out_csv = tmp_path / "scan.csv"
    report = tmp_path / "report.json"
    argv = [
        "delta-p", "--p", "0.1", "df-scan", "--branch", "c_minus",
        "--n", "4", "--grid", "3",
        "--out", str(out_csv), "--report", str(report),
    ]
    code, out, _ = run_cli(argv, capsys)
    assert code == 0
    summary = json.loads(out)
    assert summary["verdict"] == "POLYSTABLE-EVIDENCE"
    assert summary["rows"] == 6 * 9
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "case,e,f,df_pos,df_neg,valid"
    assert len(lines) == 1 + 54
    rep = json.loads(report.read_text())
    assert rep["verdict"] == "POLYSTABLE-EVIDENCE"
    assert len(rep["cases"]) == 6

    # identical invocation, byte-identical artifacts
    out_csv2 = tmp_path / "scan2.csv"
    report2 = tmp_path / "report2.json"
    argv2 = argv[:-3] + [str(out_csv2), "--report", str(report2)]
    code, _, _ = run_cli(argv2, capsys)
    assert code == 0
    assert out_csv2.read_bytes() == out_csv.read_bytes()
    assert report2.read_bytes() == report.read_bytes()


def test_df_scan_explicit_coefficients(tmp_path, capsys):
    out_csv = tmp_path / "scan.csv"
    argv = [
        "delta-p", "--p", "0.1", "df-scan", "--f", "0,0,1",
        "--grid", "3", "--out", str(out_csv),
    ]
    code, out, _ = run_cli(argv, capsys)
    assert code == 0
    # constant potential on the blow-up polygon is obstructed
    assert json.loads(out)["verdict"] == "UNSTABLE"


def test_df_scan_flag_validation(tmp_path, capsys):
    base = ["delta-p", "--p", "0.1", "df-scan", "--out", str(tmp_path / "x.csv")]
    # neither --branch nor --f
    code, _, err = run_cli(base, capsys)
    assert code == 1
    # both at once
    code, _, err = run_cli(base + ["--branch", "c_minus", "--f", "0,0,1"], capsys)
    assert code == 1
    # malformed coefficient list
    code, _, err = run_cli(base + ["--f", "1,2"], capsys)
    assert code == 1
    assert "three comma-separated coefficients" in err
    # grid below the minimum
    code, _, err = run_cli(base + ["--branch", "c_minus", "--grid", "1"], capsys)
    assert code == 1
    # branch outside its validity window
    code, _, err = run_cli(base + ["--branch", "b_plus"], capsys)
    assert code == 1
    assert "8/9" in err


def test_polytope_futaki(tmp_path, capsys):
    poly = tmp_path / "poly.json"
    poly.write_text(json.dumps({"vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]}))
    argv = ["polytope", "--file", str(poly), "futaki", "--f", "0,0,1", "--n", "4"]
    code, out, _ = run_cli(argv, capsys)
    assert code == 0
    body = json.loads(out)
    assert body["eh"] == pytest.approx(8.0)
    assert abs(body["fut_mu1"]) < 1e-10


def test_polytope_futaki_sigma_flag(tmp_path, capsys):
    # arc-length measure unbalances the simplex Futaki invariant at constant f
    poly = tmp_path / "simplex.json"
    poly.write_text(json.dumps({"vertices": [[0, 0], [1, 0], [0, 1]]}))
    base = ["polytope", "--file", str(poly), "futaki", "--f", "0,0,1"]
    code, out, _ = run_cli(base, capsys)
    assert code == 0
    assert abs(json.loads(out)["fut_mu1"]) < 1e-10
    code, out, _ = run_cli(base + ["--sigma", "euclidean"], capsys)
    assert code == 0
    assert abs(json.loads(out)["fut_mu1"]) > 0.05
    code, _, err = run_cli(base + ["--sigma", "arc"], capsys)
    assert code == 1


def test_polytope_futaki_file_errors(tmp_path, capsys):
    # missing file -> I/O
    argv = ["polytope", "--file", str(tmp_path / "none.json"), "futaki", "--f", "0,0,1"]
    code, _, err = run_cli(argv, capsys)
    assert code == 3
    # not JSON -> invalid input
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    code, _, err = run_cli(
        ["polytope", "--file", str(bad), "futaki", "--f", "0,0,1"], capsys
    )
    assert code == 1
    # JSON without a vertex list -> invalid input
    empty = tmp_path / "empty.json"
    empty.write_text("{}")
    code, _, err = run_cli(
        ["polytope", "--file", str(empty), "futaki", "--f", "0,0,1"], capsys
    )
    assert code == 1


def test_verify_cli(capsys):
    code, out, _ = run_cli(["verify", "--suite", "slice"], capsys)
    assert code == 0
    assert out.count("[PASS]") == 2
    assert "all 2 checks passed" in out
    code, _, err = run_cli(["verify", "--suite", "nope"], capsys)
    assert code == 1


def test_installed_entry_point():
    # the console script exists and answers --help
    proc = subprocess.run(
        ["toric-kstab", "--help"], capture_output=True, text=True, timeout=60
    )
    assert proc.returncode == 0
    assert "delta-p" in proc.stdout


def test_threads_env_fallback(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("TORIC_KSTAB_THREADS", "2")
    out_csv = tmp_path / "scan.csv"
    argv = [
        "delta-p", "--p", "0.1", "df-scan", "--branch", "c_minus",
        "--grid", "3", "--out", str(out_csv),
    ]
    code, out, _ = run_cli(argv, capsys)
    assert code == 0
    assert json.loads(out)["verdict"] == "POLYSTABLE-EVIDENCE"
