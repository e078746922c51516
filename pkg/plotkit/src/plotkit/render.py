"""Figure renderers for the four supported plot kinds.

All rendering is deterministic given (data file, spec): a fixed Agg
backend, fixed default style, constant image metadata, and no wall-clock
or RNG inputs anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import PolyCollection  # noqa: E402
from matplotlib.colors import LogNorm, Normalize  # noqa: E402

from . import io  # noqa: E402

KINDS = ("ternary", "boundary-hist2d", "pmf-overlay", "diag-scatter")

#: Boundary separator style shared by all strip renderings.
SEPARATOR_STYLE = {"color": "cyan", "linestyle": "dashdot", "linewidth": 1.4}


@dataclass
class PlotSpec:
    kind: str
    data: str
    out: str
    cmap: str = "viridis"
    dpi: int = 150
    log_color: bool = False
    log_x: bool = False
    log_y: bool = False
    title: str | None = None
    figsize: tuple[float, float] = field(default=(7.0, 5.6))

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")


def render(spec: PlotSpec) -> str:
    """Render the figure described by ``spec``; returns the output path."""
    plt.rcdefaults()
    plt.rcParams["svg.hashsalt"] = "plotkit"
    fig = plt.figure(figsize=spec.figsize)
    try:
        _RENDERERS[spec.kind](fig, spec)
        if spec.title:
            fig.suptitle(spec.title)
        fig.savefig(spec.out, dpi=spec.dpi,
                    metadata=_metadata_for(spec.out))
    finally:
        plt.close(fig)
    return spec.out


def _metadata_for(out: str) -> dict:
    if out.endswith(".svg"):
        return {"Date": None}
    return {"Software": "plotkit"}


def _color_norm(counts: np.ndarray, log_color: bool):
    vmax = max(1, int(counts.max()))
    if log_color:
        return LogNorm(vmin=1, vmax=vmax)
    return Normalize(vmin=0, vmax=vmax)


# ---------------------------------------------------------------------------
# Ternary

_SQ3_2 = math.sqrt(3.0) / 2.0


def ternary_xy(p0: float, p1: float) -> tuple[float, float]:
    """Barycentric (p0, p1, p2) to plane; p1 at origin, p2 right, p0 top."""
    p2 = 1.0 - p0 - p1
    return 0.5 * p0 + p2, _SQ3_2 * p0


def triangle_vertices(i: int, j: int, orientation: str,
                      resolution: int) -> list[tuple[float, float]]:
    """Plane corners of one simplex bin (indices over p0 and p1)."""
    if orientation == "up":
        corners = [(i, j), (i + 1, j), (i, j + 1)]
    else:
        corners = [(i + 1, j), (i, j + 1), (i + 1, j + 1)]
    return [ternary_xy(a / resolution, b / resolution) for a, b in corners]


def _render_ternary(fig, spec: PlotSpec):
    cells, resolution = io.read_ternary(spec.data)
    ax = fig.add_subplot(111)
    polys = [triangle_vertices(c.i, c.j, c.orientation, resolution)
             for c in cells]
    counts = np.array([c.count for c in cells], dtype=float)
    coll = PolyCollection(polys, array=counts, cmap=spec.cmap,
                          norm=_color_norm(counts, spec.log_color),
                          edgecolors="none")
    ax.add_collection(coll)
    outline = [ternary_xy(1, 0), ternary_xy(0, 1), ternary_xy(0, 0),
               ternary_xy(1, 0)]
    ax.plot(*zip(*outline), color="0.3", linewidth=1.0)
    ax.annotate("p0", ternary_xy(1, 0), xytext=(0, 8),
                textcoords="offset points", ha="center")
    ax.annotate("p1", ternary_xy(0, 1), xytext=(-10, -4),
                textcoords="offset points", ha="right")
    ax.annotate("p2", ternary_xy(0, 0), xytext=(10, -4),
                textcoords="offset points", ha="left")
    ax.set_xlim(-0.08, 1.08)
    ax.set_ylim(-0.08, _SQ3_2 + 0.08)
    ax.set_aspect("equal")
    ax.set_axis_off()
    fig.colorbar(coll, ax=ax, label="genes per bin", shrink=0.8)


# ---------------------------------------------------------------------------
# BoundaryHist2D

#: Strip width and gap, as fractions of the interior axis span.
_STRIP_FRAC = 0.06
_GAP_FRAC = 0.03


def _render_boundary_hist2d(fig, spec: PlotSpec):
    data = io.read_hist2d(spec.data)
    by_region: dict[str, list[io.Hist2dCell]] = {}
    for c in data.cells:
        by_region.setdefault(c.region, []).append(c)

    interior = by_region.get("interior", [])
    if interior:
        x_min = min(c.x_lo for c in interior)
        x_max = max(c.x_hi for c in interior)
        y_min = min(c.y_lo for c in interior)
        y_max = max(c.y_hi for c in interior)
    else:
        x_min, x_max, y_min, y_max = 0.0, 1.0, 0.0, 1.0
    x_span = (x_max - x_min) or 1.0
    y_span = (y_max - y_min) or 1.0
    strip_w, gap_w = _STRIP_FRAC * x_span, _GAP_FRAC * x_span
    strip_h, gap_h = _STRIP_FRAC * y_span, _GAP_FRAC * y_span

    grid = fig.add_gridspec(1, 2, width_ratios=(5, 1), wspace=0.35)
    ax = fig.add_subplot(grid[0, 0])
    counts = np.array([c.count for c in data.cells], dtype=float)
    norm = _color_norm(counts, spec.log_color)
    cmap = plt.get_cmap(spec.cmap)

    def rect(x0, x1, y0, y1, count):
        ax.fill([x0, x1, x1, x0], [y0, y0, y1, y1],
                color=cmap(norm(count)), linewidth=0)

    for c in interior:
        rect(c.x_lo, c.x_hi, c.y_lo, c.y_hi, c.count)
    # offset bands outside the interior range hold the boundary fits
    bx0 = x_min - gap_w - strip_w
    by0 = y_min - gap_h - strip_h
    for c in by_region.get("x_boundary", []):
        rect(bx0, bx0 + strip_w, c.y_lo, c.y_hi, c.count)
    for c in by_region.get("y_boundary", []):
        rect(c.x_lo, c.x_hi, by0, by0 + strip_h, c.count)
    for c in by_region.get("xy_boundary", []):
        rect(bx0, bx0 + strip_w, by0, by0 + strip_h, c.count)

    if "x_boundary" in by_region or "xy_boundary" in by_region:
        ax.axvline(x_min - gap_w / 2, **SEPARATOR_STYLE)
    if "y_boundary" in by_region or "xy_boundary" in by_region:
        ax.axhline(y_min - gap_h / 2, **SEPARATOR_STYLE)

    def axis_label(name, scale):
        return f"log10({name} - 1)" if (scale == "log10" and name == "d") \
            else (f"log10({name})" if scale == "log10" else name)

    ax.set_xlim(bx0 - gap_w, x_max + gap_w)
    ax.set_ylim(by0 - gap_h, y_max + gap_h)
    ax.set_xlabel(axis_label(data.x_name, data.x_scale))
    ax.set_ylabel(axis_label(data.y_name, data.y_scale))
    fig.colorbar(plt.cm.ScalarMappable(norm=norm, cmap=cmap), ax=ax,
                 label="genes per bin", shrink=0.9)

    # side bars: proportion of genes in each region
    total = counts.sum() or 1.0
    regions = ["interior", "x_boundary", "y_boundary", "xy_boundary"]
    props = [sum(c.count for c in by_region.get(r, ())) / total
             for r in regions]
    bar_ax = fig.add_subplot(grid[0, 1])
    ypos = np.arange(len(regions))[::-1]
    bar_ax.barh(ypos, props, color="0.45")
    bar_ax.set_yticks(ypos)
    bar_ax.set_yticklabels(regions, fontsize=8)
    bar_ax.set_xlim(0, 1)
    bar_ax.set_xlabel("proportion", fontsize=8)
    bar_ax.tick_params(labelsize=8)


# ---------------------------------------------------------------------------
# PmfOverlay

def _render_pmf_overlay(fig, spec: PlotSpec):
    values, empirical, model = io.read_pmf(spec.data)
    ax = fig.add_subplot(111)
    ax.bar(values, empirical, width=0.85, color="0.75",
           label="empirical", edgecolor="0.5", linewidth=0.4)
    ax.plot(values, model, color="C3", marker="o", markersize=3,
            linewidth=1.2, label="model")
    ax.set_xlabel("count value")
    ax.set_ylabel("probability mass")
    if spec.log_y:
        ax.set_yscale("log")
    ax.legend()


# ---------------------------------------------------------------------------
# DiagScatter

def _render_diag_scatter(fig, spec: PlotSpec):
    rows = io.read_scatter(spec.data)
    means = np.array([r["mean_count"] for r in rows])
    zf = np.array([r["zero_fraction"] for r in rows])
    wass = np.array([r["wasserstein"] for r in rows])
    p_bs = [r["p_b"] for r in rows]
    have_pb = any(p is not None for p in p_bs)

    panels = 2 if have_pb else 1
    axes = fig.subplots(1, panels, squeeze=False)[0]
    sc = axes[0].scatter(means, wass, c=zf, cmap=spec.cmap, s=12,
                         vmin=0.0, vmax=1.0)
    axes[0].set_xlabel("mean count")
    axes[0].set_ylabel("Wasserstein distance")
    if spec.log_x:
        axes[0].set_xscale("log")
    if spec.log_y:
        axes[0].set_yscale("log")
    if have_pb:
        pb = np.array([p if p is not None else np.nan for p in p_bs])
        axes[1].scatter(means, pb, c=zf, cmap=spec.cmap, s=12,
                        vmin=0.0, vmax=1.0)
        axes[1].set_xlabel("mean count")
        axes[1].set_ylabel("p_B")
        axes[1].set_ylim(-0.05, 1.05)
        if spec.log_x:
            axes[1].set_xscale("log")
    fig.colorbar(sc, ax=list(axes), label="zero fraction", shrink=0.85)


_RENDERERS = {
    "ternary": _render_ternary,
    "boundary-hist2d": _render_boundary_hist2d,
    "pmf-overlay": _render_pmf_overlay,
    "diag-scatter": _render_diag_scatter,
}
