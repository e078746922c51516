"""Plot-data export tables: results I/O, ternary bins, boundary histograms."""

import numpy as np
import pytest

from zinbgt import GeneCounts, ZinbgtParams
from zinbgt.export import (
    boundary_flags,
    hist2d_with_boundaries,
    pmf_table,
    read_results_tsv,
    ternary_bins,
    write_results_tsv,
)


def row(**kw):
    base = {
        "gene_id": "g", "n_cells": 100, "n_unique": 3, "max_count": 5,
        "mean_count": 1.0, "submodel": "nb-only",
        "p0": 0.5, "p1": 0.5, "p2": 0.0, "m": 2.0, "d": 3.0, "mu_g": 0.0,
        "loglik": -10.0, "bic": 25.0, "n_iter": 4, "converged": True,
        "boundary_flags": "", "wasserstein": 0.01, "p_b": 0.9,
        "diag_skipped_reason": None,
    }
    base.update(kw)
    return base


def test_results_round_trip(tmp_path):
    rows = [row(), row(gene_id="h", wasserstein=None, p_b=None,
                     diag_skipped_reason="all-zero", p0=1.0, p1=0.0, m=0.0,
                     d=1.0, submodel="all-zero", converged=True)]
    p = tmp_path / "r.tsv"
    write_results_tsv(rows, p)
    back = read_results_tsv(p)
    assert back[0]["p0"] == 0.5 and back[0]["converged"] is True
    assert back[1]["wasserstein"] is None
    assert back[1]["p0"] == 1.0
    # floats survive exactly via repr round-trip
    assert back[0]["loglik"] == -10.0


def test_boundary_flags():
    assert boundary_flags(ZinbgtParams(0.5, 0.5, 0.0, 2.0, 3.0, 0.0)) == \
        ["p2=0", "mu_g=0"]
    assert boundary_flags(ZinbgtParams(1.0, 0.0, 0.0, 0.0, 1.0, 0.0)) == \
        ["p0=1", "p1=0", "p2=0", "m=0", "d=1", "mu_g=0"]


def test_ternary_bins_cover_and_count():
    rows = [row(p0=0.2, p1=0.5, p2=0.3), row(p0=0.21, p1=0.5, p2=0.29),
            row(p0=0.9, p1=0.1, p2=0.0)]
    cells = ternary_bins(rows, resolution=10)
    assert sum(c["count"] for c in cells) == 3
    for c in cells:
        assert c["p0_center"] + c["p1_center"] + c["p2_center"] == \
            pytest.approx(1.0)
        assert c["orientation"] in ("up", "down")


def test_ternary_vertex_concentration():
    rows = [row(p0=1.0, p1=0.0, p2=0.0)] * 5
    cells = ternary_bins(rows, resolution=10)
    assert len(cells) == 1
    assert cells[0]["i"] == 9 and cells[0]["count"] == 5


def test_hist2d_boundary_strips():
    rows = [
        row(p0=0.4, m=2.0, d=1.0),   # PoissonOnly-style: d at boundary
        row(p0=0.4, m=3.0, d=2.0),   # interior
        row(p0=0.4, m=0.0, d=1.0),   # both at boundary
    ]
    cells = hist2d_with_boundaries(rows, "m", "d", bins=5)
    regions = {c["region"] for c in cells}
    assert "interior" in regions
    assert "y_boundary" in regions  # d pinned at 1, binned along m
    assert "xy_boundary" in regions
    assert sum(c["count"] for c in cells) == 3


def test_hist2d_all_zero_gene_lands_on_p0_boundary():
    rows = [row(p0=1.0, p1=0.0, p2=0.0, m=0.0, d=1.0, mu_g=0.0)]
    cells = hist2d_with_boundaries(rows, "p0", "p1", bins=4)
    assert len(cells) == 1 and cells[0]["region"] == "xy_boundary"


def test_pmf_table_model_normalized():
    theta = ZinbgtParams(0.5, 0.5, 0.0, 2.0, 1.0, 0.0)
    g = GeneCounts.from_pairs("g", [(0, 5), (1, 3), (3, 2)], 10)
    support, emp, model = pmf_table(g, theta)
    assert emp.sum() == pytest.approx(1.0, abs=1e-12)
    assert model.sum() == pytest.approx(1.0, abs=1e-9)
    assert support[0] == 0 and support[-1] >= g.max_count
