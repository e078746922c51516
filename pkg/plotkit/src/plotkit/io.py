"""Readers for the tidy TSV schemas emitted by ``zinbgt export-plots``."""

from __future__ import annotations

from dataclasses import dataclass


class DataError(ValueError):
    """Malformed or empty plot-data file."""


def _read_tsv(path, required: tuple[str, ...]) -> list[dict[str, str]]:
    comments: list[str] = []
    rows: list[dict[str, str]] = []
    with open(path) as fh:
        header: list[str] | None = None
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                comments.append(line)
                continue
            fields = line.split("\t")
            if header is None:
                header = fields
                missing = [c for c in required if c not in header]
                if missing:
                    raise DataError(
                        f"{path}: missing columns {', '.join(missing)}")
                continue
            rows.append(dict(zip(header, fields)))
    if header is None or not rows:
        raise DataError(f"{path}: no data rows")
    for r in rows:
        r["_comments"] = comments  # type: ignore[assignment]
    return rows


@dataclass
class TernaryCell:
    i: int
    j: int
    orientation: str
    count: int


def read_ternary(path) -> tuple[list[TernaryCell], int]:
    """Ternary bin densities; returns (cells, edge resolution).

    The resolution is recovered from any cell's center coordinate:
    an upward cell at index i has p0_center = (3i + 1) / (3R).
    """
    raw = _read_tsv(path, ("i", "j", "orientation", "p0_center", "count"))
    cells = [TernaryCell(int(r["i"]), int(r["j"]), r["orientation"],
                         int(r["count"])) for r in raw]
    r0 = raw[0]
    k = 1 if r0["orientation"] == "up" else 2
    resolution = round((3 * int(r0["i"]) + k) / (3 * float(r0["p0_center"])))
    return cells, resolution


@dataclass
class Hist2dCell:
    region: str
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    count: int


@dataclass
class Hist2dData:
    cells: list[Hist2dCell]
    x_name: str
    y_name: str
    x_scale: str
    y_scale: str


def read_hist2d(path) -> Hist2dData:
    raw = _read_tsv(path, ("region", "x_lo", "x_hi", "y_lo", "y_hi", "count"))
    cells = [Hist2dCell(r["region"], float(r["x_lo"]), float(r["x_hi"]),
                        float(r["y_lo"]), float(r["y_hi"]), int(r["count"]))
             for r in raw]
    x_name, y_name = "x", "y"
    x_scale = y_scale = "linear"
    for comment in raw[0]["_comments"]:  # type: ignore[index]
        parts = comment.lstrip("# ").split()
        # "# x=m scale=log10 y=d scale=log10"
        for idx, p in enumerate(parts):
            if p.startswith("x="):
                x_name = p[2:]
                if idx + 1 < len(parts) and parts[idx + 1].startswith("scale="):
                    x_scale = parts[idx + 1][6:]
            elif p.startswith("y="):
                y_name = p[2:]
                if idx + 1 < len(parts) and parts[idx + 1].startswith("scale="):
                    y_scale = parts[idx + 1][6:]
    return Hist2dData(cells, x_name, y_name, x_scale, y_scale)


def read_pmf(path) -> tuple[list[int], list[float], list[float]]:
    raw = _read_tsv(path, ("value", "empirical", "model"))
    values = [int(r["value"]) for r in raw]
    empirical = [float(r["empirical"]) for r in raw]
    model = [float(r["model"]) for r in raw]
    return values, empirical, model


def read_scatter(path) -> list[dict]:
    raw = _read_tsv(path, ("gene_id", "mean_count", "zero_fraction",
                           "wasserstein"))
    out = []
    for r in raw:
        out.append({
            "gene_id": r["gene_id"],
            "mean_count": float(r["mean_count"]),
            "zero_fraction": float(r["zero_fraction"]),
            "wasserstein": float(r["wasserstein"]),
            "p_b": float(r["p_b"]) if r.get("p_b") else None,
        })
    return out
