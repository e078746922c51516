"""Rendering determinism, data parsing, and figure geometry."""

import math

import pytest

from plotkit.cli import EXIT_INPUT, EXIT_OK, main
from plotkit.io import DataError, read_hist2d, read_pmf, read_scatter, read_ternary
from plotkit.render import PlotSpec, render, ternary_xy, triangle_vertices


@pytest.fixture
def ternary_file(tmp_path):
    p = tmp_path / "ternary.tsv"
    p.write_text(
        "i\tj\torientation\tp0_center\tp1_center\tp2_center\tcount\n"
        "2\t5\tup\t" + repr(7 / 30) + "\t" + repr(16 / 30) + "\t"
        + repr(1 - 7 / 30 - 16 / 30) + "\t4\n"
        "9\t0\tup\t" + repr(28 / 30) + "\t" + repr(1 / 30) + "\t"
        + repr(1 - 29 / 30) + "\t5\n"
    )
    return p


@pytest.fixture
def hist2d_file(tmp_path):
    p = tmp_path / "hist2d_m_d.tsv"
    p.write_text(
        "# x=m scale=log10 y=d scale=log10\n"
        "region\tx_lo\tx_hi\ty_lo\ty_hi\tcount\n"
        "interior\t0.1\t0.3\t0.2\t0.5\t7\n"
        "interior\t0.3\t0.5\t0.5\t0.8\t2\n"
        "y_boundary\t0.1\t0.3\t1.0\t1.0\t3\n"
        "xy_boundary\t0.0\t0.0\t1.0\t1.0\t1\n"
    )
    return p


@pytest.fixture
def pmf_file(tmp_path):
    # exactly-fitted zero/one gene: empirical and model mass coincide
    p = tmp_path / "pmf_g.tsv"
    p.write_text("value\tempirical\tmodel\n0\t0.7\t0.7\n1\t0.3\t0.3\n")
    return p


@pytest.fixture
def scatter_file(tmp_path):
    p = tmp_path / "scatter.tsv"
    p.write_text(
        "gene_id\tmean_count\tzero_fraction\twasserstein\tp_b\n"
        "a\t1.5\t0.4\t0.02\t0.9\n"
        "b\t6.0\t0.1\t0.15\t0.0\n"
        "c\t0.3\t0.8\t0.01\t\n"
    )
    return p


def test_read_ternary_recovers_resolution(ternary_file):
    cells, resolution = read_ternary(ternary_file)
    assert resolution == 10
    assert [c.count for c in cells] == [4, 5]


def test_read_hist2d_parses_axis_comment(hist2d_file):
    data = read_hist2d(hist2d_file)
    assert (data.x_name, data.x_scale) == ("m", "log10")
    assert (data.y_name, data.y_scale) == ("d", "log10")
    assert sum(c.count for c in data.cells) == 13
    assert {c.region for c in data.cells} == \
        {"interior", "y_boundary", "xy_boundary"}


def test_read_scatter_optional_p_b(scatter_file):
    rows = read_scatter(scatter_file)
    assert rows[0]["p_b"] == 0.9 and rows[2]["p_b"] is None


def test_missing_column_and_empty_file(tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("value\tempirical\n0\t1.0\n")
    with pytest.raises(DataError, match="model"):
        read_pmf(bad)
    empty = tmp_path / "empty.tsv"
    empty.write_text("value\tempirical\tmodel\n")
    with pytest.raises(DataError, match="no data rows"):
        read_pmf(empty)


def test_ternary_geometry():
    # simplex corners map to the reference triangle's vertices
    assert ternary_xy(1, 0) == pytest.approx((0.5, math.sqrt(3) / 2))
    assert ternary_xy(0, 1) == (0.0, 0.0)
    assert ternary_xy(0, 0) == (1.0, 0.0)
    # the bin at the p0 vertex stays within one bin-width of that vertex
    verts = triangle_vertices(9, 0, "up", 10)
    apex = ternary_xy(1, 0)
    for vx, vy in verts:
        assert math.hypot(vx - apex[0], vy - apex[1]) <= 0.11
    # up and down bins of one cell tile the same rhombus
    up = set(triangle_vertices(2, 3, "up", 10))
    down = set(triangle_vertices(2, 3, "down", 10))
    assert len(up & down) == 2


@pytest.mark.parametrize("kind,fixture", [
    ("ternary", "ternary_file"),
    ("boundary-hist2d", "hist2d_file"),
    ("pmf-overlay", "pmf_file"),
    ("diag-scatter", "scatter_file"),
])
def test_double_render_byte_identical(kind, fixture, tmp_path, request):
    data = request.getfixturevalue(fixture)
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    render(PlotSpec(kind=kind, data=str(data), out=str(a)))
    render(PlotSpec(kind=kind, data=str(data), out=str(b)))
    first = a.read_bytes()
    assert first[:8] == b"\x89PNG\r\n\x1a\n"
    assert first == b.read_bytes()


def test_cli_renders_and_reports_errors(hist2d_file, tmp_path):
    out = tmp_path / "fig.png"
    assert main(["boundary-hist2d", "--data", str(hist2d_file),
                 "--out", str(out), "--log-color"]) == EXIT_OK
    assert out.exists() and out.stat().st_size > 0
    assert main(["ternary", "--data", str(tmp_path / "missing.tsv"),
                 "--out", str(out)]) == EXIT_INPUT
    bad = tmp_path / "bad.tsv"
    bad.write_text("i\tj\n1\t2\n")
    assert main(["ternary", "--data", str(bad), "--out", str(out)]) \
        == EXIT_INPUT


def test_style_flags_change_output(pmf_file, tmp_path):
    base, styled = tmp_path / "x.png", tmp_path / "y.png"
    render(PlotSpec(kind="pmf-overlay", data=str(pmf_file), out=str(base)))
    render(PlotSpec(kind="pmf-overlay", data=str(pmf_file), out=str(styled),
                    log_y=True, title="styled"))
    assert base.read_bytes() != styled.read_bytes()


def test_end_to_end_with_primary_exports(tmp_path):
    zinbgt_cli = pytest.importorskip("zinbgt.cli")
    src = tmp_path / "counts.tsv"
    header = "gene\t" + "\t".join(f"c{i}" for i in range(20))
    rows = [
        "gz\t" + "\t".join(["0"] * 20),
        "gx\t" + "\t".join(["0"] * 8 + ["1"] * 5 + ["2"] * 4 + ["7"] * 3),
    ]
    src.write_text(header + "\n" + "\n".join(rows) + "\n")
    fit_out = tmp_path / "fit"
    assert zinbgt_cli.main([
        "fit", "--input", str(src), "--format", "tsv", "--has-header",
        "--has-rownames", "--boot", "10", "--out", str(fit_out)]) == 0
    plots = tmp_path / "plots"
    assert zinbgt_cli.main([
        "export-plots", "--results", str(fit_out / "results.tsv"),
        "--out", str(plots), "--genes", "gx", "--input", str(src),
        "--format", "tsv", "--has-header", "--has-rownames"]) == 0
    for kind, data in [
        ("ternary", plots / "ternary.tsv"),
        ("boundary-hist2d", plots / "hist2d_m_d.tsv"),
        ("pmf-overlay", plots / "pmf_gx.tsv"),
        ("diag-scatter", plots / "scatter.tsv"),
    ]:
        out = tmp_path / f"{kind}.png"
        assert main([kind, "--data", str(data), "--out", str(out)]) == EXIT_OK
        assert out.stat().st_size > 0
