"""Tidy plot-data exports derived from a fit results table.

Four file families: ternary bin densities over the mixture weights, 2-D
parameter histograms with boundary values split into marginal strips,
per-gene empirical-vs-model pmf tables, and diagnostic scatter tables.
All files are TSV; downstream figure rendering lives in the separate
``plotkit`` package.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .ingest import GeneCounts
from .model import Submodel, ZinbgtParams, truncated_pmf

RESULT_COLUMNS = [
    "gene_id", "n_cells", "n_unique", "max_count", "mean_count", "submodel",
    "p0", "p1", "p2", "m", "d", "mu_g", "loglik", "bic", "n_iter",
    "converged", "boundary_flags", "wasserstein", "p_b", "diag_skipped_reason",
]

PARAM_COLS = ("p0", "p1", "p2", "m", "d", "mu_g")

#: Parameter boundary values introduced by submodel restrictions.
BOUNDARY_VALUES = {
    "p0": 1.0, "p1": 0.0, "p2": 0.0, "m": 0.0, "d": 1.0, "mu_g": 0.0,
}

#: Axis scale used for interior bins of each parameter.
PARAM_SCALE = {
    "p0": "linear", "p1": "linear", "p2": "linear",
    "m": "log10", "d": "log10", "mu_g": "log10",
}


def boundary_flags(theta: ZinbgtParams) -> list[str]:
    flags = []
    for name in PARAM_COLS:
        if getattr(theta, name) == BOUNDARY_VALUES[name]:
            flags.append(f"{name}={BOUNDARY_VALUES[name]:g}")
    return flags


def format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def write_results_tsv(rows: list[dict], path):
    with open(path, "w") as fh:
        fh.write("\t".join(RESULT_COLUMNS) + "\n")
        for row in rows:
            fh.write("\t".join(format_cell(row.get(c)) for c in RESULT_COLUMNS))
            fh.write("\n")


def read_results_tsv(path) -> list[dict]:
    rows = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        for line in fh:
            fields = line.rstrip("\n").split("\t")
            row = dict(zip(header, fields))
            for c in ("p0", "p1", "p2", "m", "d", "mu_g", "loglik", "bic",
                      "wasserstein", "p_b", "mean_count"):
                row[c] = float(row[c]) if row.get(c) else None
            for c in ("n_cells", "n_unique", "max_count", "n_iter"):
                row[c] = int(row[c]) if row.get(c) else None
            row["converged"] = row.get("converged") == "true"
            rows.append(row)
    return rows


def _fitted_rows(rows):
    return [r for r in rows if r.get("p0") is not None]


# ---------------------------------------------------------------------------
# Ternary binning

def ternary_bins(rows: list[dict], resolution: int = 40) -> list[dict]:
    """Triangular binning of (p0, p1, p2) at the given edge resolution.

    Each simplex cell is an upward or downward small triangle indexed by
    (i, j) = (floor(p0*R), floor(p1*R)).
    """
    bins: dict[tuple[int, int, str], int] = {}
    for r in _fitted_rows(rows):
        a = r["p0"] * resolution
        b = r["p1"] * resolution
        i = min(int(math.floor(a)), resolution - 1)
        j = min(int(math.floor(b)), resolution - 1)
        if i + j >= resolution:
            j = resolution - 1 - i
        frac = (a - i) + (b - j)
        orient = "up" if frac <= 1.0 or i + j == resolution - 1 else "down"
        key = (i, j, orient)
        bins[key] = bins.get(key, 0) + 1
    out = []
    for (i, j, orient), count in sorted(bins.items()):
        if orient == "up":
            c0 = (3 * i + 1) / (3 * resolution)
            c1 = (3 * j + 1) / (3 * resolution)
        else:
            c0 = (3 * i + 2) / (3 * resolution)
            c1 = (3 * j + 2) / (3 * resolution)
        out.append({
            "i": i, "j": j, "orientation": orient,
            "p0_center": c0, "p1_center": c1, "p2_center": 1.0 - c0 - c1,
            "count": count,
        })
    return out


def write_ternary(rows, path, resolution: int = 40):
    cells = ternary_bins(rows, resolution)
    with open(path, "w") as fh:
        fh.write("i\tj\torientation\tp0_center\tp1_center\tp2_center\tcount\n")
        for c in cells:
            fh.write("\t".join(format_cell(c[k]) for k in
                               ("i", "j", "orientation", "p0_center",
                                "p1_center", "p2_center", "count")) + "\n")


# ---------------------------------------------------------------------------
# 2-D histograms with boundary strips

def _interior_value(name: str, v: float) -> float:
    if PARAM_SCALE[name] == "log10":
        base = 1.0 if name == "d" else 0.0
        return math.log10(v - base) if name == "d" else math.log10(v)
    return v


def hist2d_with_boundaries(rows: list[dict], x: str, y: str, bins: int = 50):
    """Interior 2-D histogram plus boundary strips.

    Genes at a parameter's restriction value (e.g. d=1 from a Poisson
    submodel) are counted in dedicated strips instead of the interior grid,
    so near-boundary and at-boundary genes stay visually separable.
    """
    fitted = _fitted_rows(rows)
    interior, x_bound, y_bound, xy_bound = [], [], [], 0
    for r in fitted:
        bx = r[x] == BOUNDARY_VALUES[x]
        by = r[y] == BOUNDARY_VALUES[y]
        if bx and by:
            xy_bound += 1
        elif bx:
            x_bound.append(_interior_value(y, r[y]))
        elif by:
            y_bound.append(_interior_value(x, r[x]))
        else:
            interior.append((_interior_value(x, r[x]), _interior_value(y, r[y])))
    out = []
    if interior:
        xs = np.array([p[0] for p in interior])
        ys = np.array([p[1] for p in interior])
        h, xe, ye = np.histogram2d(xs, ys, bins=bins)
        nz = np.nonzero(h)
        for i, j in zip(*nz):
            out.append({"region": "interior",
                        "x_lo": xe[i], "x_hi": xe[i + 1],
                        "y_lo": ye[j], "y_hi": ye[j + 1],
                        "count": int(h[i, j])})
    for strip, vals, other in (("x_boundary", x_bound, y),
                               ("y_boundary", y_bound, x)):
        if not vals:
            continue
        h, edges = np.histogram(np.array(vals), bins=bins)
        for i in np.nonzero(h)[0]:
            row = {"region": strip, "count": int(h[i])}
            if strip == "x_boundary":
                row.update(x_lo=BOUNDARY_VALUES[x], x_hi=BOUNDARY_VALUES[x],
                           y_lo=edges[i], y_hi=edges[i + 1])
            else:
                row.update(x_lo=edges[i], x_hi=edges[i + 1],
                           y_lo=BOUNDARY_VALUES[y], y_hi=BOUNDARY_VALUES[y])
            out.append(row)
    if xy_bound:
        out.append({"region": "xy_boundary",
                    "x_lo": BOUNDARY_VALUES[x], "x_hi": BOUNDARY_VALUES[x],
                    "y_lo": BOUNDARY_VALUES[y], "y_hi": BOUNDARY_VALUES[y],
                    "count": xy_bound})
    return out


def write_hist2d(rows, x: str, y: str, path, bins: int = 50):
    cells = hist2d_with_boundaries(rows, x, y, bins)
    with open(path, "w") as fh:
        fh.write(f"# x={x} scale={PARAM_SCALE[x]} y={y} scale={PARAM_SCALE[y]}\n")
        fh.write("region\tx_lo\tx_hi\ty_lo\ty_hi\tcount\n")
        for c in cells:
            fh.write("\t".join(format_cell(c[k]) for k in
                               ("region", "x_lo", "x_hi", "y_lo", "y_hi",
                                "count")) + "\n")


# ---------------------------------------------------------------------------
# Per-gene pmf overlay tables

def pmf_table(counts: GeneCounts, theta: ZinbgtParams, mass_tol: float = 1e-10):
    model = truncated_pmf(theta, mass_tol, min_support_max=counts.max_count)
    emp = np.zeros(model.support.size)
    idx = np.searchsorted(model.support, counts.values)
    emp[idx] = counts.mults / counts.n_cells
    return model.support, emp, model.mass


def write_pmf_table(counts: GeneCounts, theta: ZinbgtParams, path):
    support, emp, mass = pmf_table(counts, theta)
    with open(path, "w") as fh:
        fh.write("value\tempirical\tmodel\n")
        for v, e, m in zip(support, emp, mass):
            fh.write(f"{int(v)}\t{float(e)!r}\t{float(m)!r}\n")


# ---------------------------------------------------------------------------
# Diagnostic scatter tables

def write_scatter(rows, path):
    with open(path, "w") as fh:
        fh.write("gene_id\tmean_count\tzero_fraction\twasserstein\tp_b\n")
        for r in _fitted_rows(rows):
            if r.get("wasserstein") is None:
                continue
            fh.write("\t".join([
                r["gene_id"], format_cell(r["mean_count"]),
                format_cell(r["p0"]), format_cell(r["wasserstein"]),
                format_cell(r["p_b"]),
            ]) + "\n")
