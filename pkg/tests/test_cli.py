"""End-to-end command-line pipeline: fit, simulate, export-plots."""

import json

import pytest

from zinbgt.cli import EXIT_INPUT, EXIT_OK, main
from zinbgt.export import read_results_tsv


@pytest.fixture
def three_gene_fixture(tmp_path):
    # all-zero, zero/one, and general genes as dense rows
    p = tmp_path / "three.tsv"
    header = "gene\t" + "\t".join(f"c{i}" for i in range(20))
    rows = [
        "gz\t" + "\t".join(["0"] * 20),
        "g01\t" + "\t".join(["0"] * 15 + ["1"] * 5),
        "gx\t" + "\t".join(["0"] * 8 + ["1"] * 5 + ["2"] * 4 + ["7"] * 3),
    ]
    p.write_text(header + "\n" + "\n".join(rows) + "\n")
    return p


def run_fit(fixture, out, *extra):
    return main([
        "fit", "--input", str(fixture), "--format", "tsv",
        "--has-header", "--has-rownames", "--seed", "3",
        "--boot", "20", "--out", str(out), *extra,
    ])


def test_fit_three_gene_fixture(three_gene_fixture, tmp_path):
    out = tmp_path / "out"
    assert run_fit(three_gene_fixture, out) == EXIT_OK
    rows = read_results_tsv(out / "results.tsv")
    assert [r["gene_id"] for r in rows] == ["gz", "g01", "gx"]
    assert rows[0]["submodel"] == "all-zero"
    assert rows[1]["submodel"] == "constant-one-only"
    # trivial genes carry no diagnostics, with a reason recorded
    for r in rows[:2]:
        assert r["wasserstein"] is None and r["p_b"] is None
        assert r["diag_skipped_reason"]
    assert rows[2]["wasserstein"] is not None
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "fit"
    assert set(manifest["timings"]) == {"ingest_s", "fit_s",
                                        "diagnostics_s", "write_s"}
    # JSON mirror matches the TSV row count
    data = json.loads((out / "results.json").read_text())
    assert len(data) == 3


def test_diagnostics_phase_independence(three_gene_fixture, tmp_path):
    out_none = tmp_path / "none"
    out_full = tmp_path / "full"
    assert run_fit(three_gene_fixture, out_none, "--diagnostics", "none") == EXIT_OK
    assert run_fit(three_gene_fixture, out_full, "--diagnostics", "full") == EXIT_OK
    a = read_results_tsv(out_none / "results.tsv")
    b = read_results_tsv(out_full / "results.tsv")
    for ra, rb in zip(a, b):
        for col in ("p0", "p1", "p2", "m", "d", "mu_g", "loglik", "bic",
                    "submodel"):
            assert ra[col] == rb[col]
        assert ra["wasserstein"] is None


def test_worker_count_invariance(three_gene_fixture, tmp_path):
    out1 = tmp_path / "w1"
    out2 = tmp_path / "w2"
    assert run_fit(three_gene_fixture, out1, "--threads", "1") == EXIT_OK
    assert run_fit(three_gene_fixture, out2, "--threads", "2") == EXIT_OK
    assert (out1 / "results.tsv").read_bytes() == \
        (out2 / "results.tsv").read_bytes()


def test_simulate_then_fit_round_trip(tmp_path):
    sim = tmp_path / "sim"
    assert main(["simulate", "--kind", "nb-mixture", "--genes", "4",
                 "--cells", "80", "--seed", "5", "--format", "mtx",
                 "--out", str(sim)]) == EXIT_OK
    out = tmp_path / "fit"
    assert main(["fit", "--input", str(sim / "counts.mtx"), "--format", "mtx",
                 "--boot", "10", "--out", str(out)]) == EXIT_OK
    rows = read_results_tsv(out / "results.tsv")
    assert len(rows) == 4


def test_simulate_byte_identical(tmp_path):
    args = ["simulate", "--kind", "zinbgt", "--genes", "6", "--cells", "30",
            "--seed", "2", "--format", "tsv"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    assert (tmp_path / "a/counts.tsv").read_bytes() == \
        (tmp_path / "b/counts.tsv").read_bytes()


def test_export_plots_outputs(three_gene_fixture, tmp_path):
    out = tmp_path / "out"
    run_fit(three_gene_fixture, out)
    plots = tmp_path / "plots"
    assert main(["export-plots", "--results", str(out / "results.tsv"),
                 "--out", str(plots)]) == EXIT_OK
    assert (plots / "ternary.tsv").exists()
    assert (plots / "scatter.tsv").exists()
    assert any(p.name.startswith("hist2d_") for p in plots.iterdir())
    assert main(["export-plots", "--results", str(out / "results.tsv"),
                 "--out", str(plots), "--genes", "gx",
                 "--input", str(three_gene_fixture), "--format", "tsv",
                 "--has-header", "--has-rownames"]) == EXIT_OK
    assert (plots / "pmf_gx.tsv").exists()


def test_input_errors_exit_2(tmp_path):
    assert main(["fit", "--input", str(tmp_path / "missing.mtx"),
                 "--out", str(tmp_path / "o")]) == EXIT_INPUT
    bad = tmp_path / "bad.tsv"
    bad.write_text("0\t1\n2.5\t0\n")
    assert main(["fit", "--input", str(bad), "--format", "tsv",
                 "--out", str(tmp_path / "o2")]) == EXIT_INPUT
