"""Count-matrix ingestion and per-gene compaction.

Every downstream computation works on :class:`GeneCounts`: the unique count
values observed for a gene together with the number of cells carrying each
value.  Supported on-disk formats are MatrixMarket coordinate files and dense
delimited text.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class IngestError(ValueError):
    """Malformed input file (bad header, negative/non-integer entry, ...)."""


class Triviality(enum.Enum):
    ALL_ZERO = "all-zero"
    ZERO_ONE_ONLY = "zero-one-only"
    GENERAL = "general"


@dataclass(eq=False)
class GeneCounts:
    """Compacted observations for one gene.

    ``values`` are the distinct counts (strictly increasing, zero included
    explicitly when observed) and ``mults`` the number of cells with each
    value; multiplicities sum to ``n_cells``.
    """

    gene_id: str
    values: np.ndarray
    mults: np.ndarray
    n_cells: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)
        self.mults = np.asarray(self.mults, dtype=np.int64)
        if self.values.ndim != 1 or self.values.shape != self.mults.shape:
            raise ValueError("values and mults must be 1-d and aligned")
        if self.values.size == 0:
            raise ValueError("empty gene")
        if np.any(self.values < 0):
            raise ValueError("negative count value")
        if np.any(np.diff(self.values) <= 0):
            raise ValueError("values must be strictly increasing")
        if np.any(self.mults < 1):
            raise ValueError("multiplicities must be >= 1")
        if int(self.mults.sum()) != self.n_cells:
            raise ValueError(
                f"multiplicities sum to {int(self.mults.sum())}, "
                f"expected n_cells={self.n_cells}"
            )

    @classmethod
    def from_values(cls, gene_id: str, per_cell, n_cells: int | None = None):
        """Compact a per-cell count vector (order-insensitive)."""
        arr = np.asarray(per_cell)
        if arr.size and not np.issubdtype(arr.dtype, np.integer):
            if not np.all(arr == np.floor(arr)):
                raise ValueError("non-integer count value")
            arr = arr.astype(np.int64)
        values, mults = np.unique(arr, return_counts=True)
        n = int(arr.size)
        if n_cells is not None and n_cells != n:
            raise ValueError("n_cells does not match vector length")
        return cls(gene_id, values, mults, n)

    @classmethod
    def from_pairs(cls, gene_id: str, pairs, n_cells: int):
        pairs = sorted(pairs)
        values = np.array([v for v, _ in pairs], dtype=np.int64)
        mults = np.array([m for _, m in pairs], dtype=np.int64)
        return cls(gene_id, values, mults, n_cells)

    @property
    def pairs(self):
        return list(zip(self.values.tolist(), self.mults.tolist()))

    @property
    def max_count(self) -> int:
        return int(self.values[-1])

    @property
    def n_zero(self) -> int:
        return int(self.mults[0]) if self.values[0] == 0 else 0

    @property
    def zero_fraction(self) -> float:
        return self.n_zero / self.n_cells

    @property
    def nonzero_values(self) -> np.ndarray:
        return self.values[self.values > 0]

    @property
    def nonzero_mults(self) -> np.ndarray:
        return self.mults[self.values > 0]

    @property
    def n_nonzero(self) -> int:
        return int(self.nonzero_mults.sum())

    @property
    def n_unique(self) -> int:
        return int(self.values.size)

    @property
    def mean(self) -> float:
        return float(np.dot(self.values, self.mults)) / self.n_cells

    def expand(self) -> np.ndarray:
        """Per-cell count vector (sorted)."""
        return np.repeat(self.values, self.mults)

    def __eq__(self, other):
        if not isinstance(other, GeneCounts):
            return NotImplemented
        return (
            self.gene_id == other.gene_id
            and self.n_cells == other.n_cells
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.mults, other.mults)
        )


def classify_trivial(counts: GeneCounts) -> Triviality:
    """All-zero and zero/one genes bypass model fitting entirely."""
    mx = counts.max_count
    if mx == 0:
        return Triviality.ALL_ZERO
    if mx == 1:
        return Triviality.ZERO_ONE_ONLY
    return Triviality.GENERAL


class MatrixFormat(enum.Enum):
    MATRIX_MARKET = "mtx"
    DENSE_DELIMITED = "dense"


class Orientation(enum.Enum):
    GENES_AS_ROWS = "rows"
    GENES_AS_COLS = "cols"


@dataclass
class CountMatrixSource:
    path: Path
    format: MatrixFormat = MatrixFormat.MATRIX_MARKET
    orientation: Orientation = Orientation.GENES_AS_ROWS
    delimiter: str = "\t"
    has_header: bool = False
    has_rownames: bool = False
    gene_names: list[str] | None = field(default=None)

    def __post_init__(self):
        self.path = Path(self.path)


def _dedupe_names(names: list[str]) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for name in names:
        k = seen.get(name, 0) + 1
        seen[name] = k
        if k == 1:
            out.append(name)
        else:
            warnings.warn(f"duplicate gene name {name!r} suffixed as #{k}")
            out.append(f"{name}#{k}")
    return out


def _parse_count_token(token: str, line_no: int, where: str) -> int:
    try:
        return int(token)
    except ValueError:
        pass
    try:
        f = float(token)
    except ValueError:
        raise IngestError(f"line {line_no}: unparseable entry {token!r} at {where}")
    if f != np.floor(f) or not np.isfinite(f):
        raise IngestError(f"line {line_no}: non-integer entry {token!r} at {where}")
    return int(f)


def load_matrix(source: CountMatrixSource) -> list[GeneCounts]:
    """Parse a count matrix and return one GeneCounts per gene, in file order.

    Sparse inputs get their implicit zeros materialised; errors name the
    offending line and gene/cell index.
    """
    if not source.path.exists():
        raise IngestError(f"no such file: {source.path}")
    if source.format is MatrixFormat.MATRIX_MARKET:
        return _load_matrix_market(source)
    return _load_dense(source)


def _load_matrix_market(source: CountMatrixSource) -> list[GeneCounts]:
    genes_as_rows = source.orientation is Orientation.GENES_AS_ROWS
    with open(source.path) as fh:
        banner = fh.readline()
        if not banner.startswith("%%MatrixMarket"):
            raise IngestError("line 1: missing %%MatrixMarket banner")
        fields = banner.strip().split()
        if len(fields) != 5 or fields[1] != "matrix" or fields[2] != "coordinate":
            raise IngestError(f"line 1: unsupported banner {banner.strip()!r}")
        if fields[3] not in ("integer", "real"):
            raise IngestError(f"line 1: unsupported value type {fields[3]!r}")
        if fields[4] != "general":
            raise IngestError(f"line 1: unsupported symmetry {fields[4]!r}")

        line_no = 1
        dims = None
        for line in fh:
            line_no += 1
            if line.startswith("%") or not line.strip():
                continue
            parts = line.split()
            if len(parts) != 3:
                raise IngestError(f"line {line_no}: bad size line {line.strip()!r}")
            try:
                dims = tuple(int(p) for p in parts)
            except ValueError:
                raise IngestError(f"line {line_no}: bad size line {line.strip()!r}")
            break
        if dims is None:
            raise IngestError("missing size line")
        nrows, ncols, nnz = dims
        n_genes = nrows if genes_as_rows else ncols
        n_cells = ncols if genes_as_rows else nrows

        per_gene: list[dict[int, int]] = [dict() for _ in range(n_genes)]
        entries_per_gene = np.zeros(n_genes, dtype=np.int64)
        n_seen = 0
        for line in fh:
            line_no += 1
            if line.startswith("%") or not line.strip():
                continue
            parts = line.split()
            if len(parts) != 3:
                raise IngestError(f"line {line_no}: bad entry {line.strip()!r}")
            try:
                r = int(parts[0])
                c = int(parts[1])
            except ValueError:
                raise IngestError(f"line {line_no}: bad indices {line.strip()!r}")
            if not (1 <= r <= nrows and 1 <= c <= ncols):
                raise IngestError(
                    f"line {line_no}: index ({r},{c}) outside {nrows}x{ncols}"
                )
            g = (r - 1) if genes_as_rows else (c - 1)
            cell = (c - 1) if genes_as_rows else (r - 1)
            v = _parse_count_token(parts[2], line_no, f"gene {g}, cell {cell}")
            if v < 0:
                raise IngestError(
                    f"line {line_no}: negative entry at gene {g}, cell {cell}"
                )
            d = per_gene[g]
            d[v] = d.get(v, 0) + 1
            entries_per_gene[g] += 1
            n_seen += 1
        if n_seen != nnz:
            raise IngestError(f"dimension mismatch: {n_seen} entries, header says {nnz}")

    names = source.gene_names or [f"gene_{i}" for i in range(n_genes)]
    if len(names) != n_genes:
        raise IngestError("gene name list length does not match matrix")
    names = _dedupe_names(list(names))

    out = []
    for g, d in enumerate(per_gene):
        if entries_per_gene[g] > n_cells:
            raise IngestError(f"gene {g}: more stored entries than cells")
        implicit_zeros = n_cells - int(entries_per_gene[g])
        n0 = d.get(0, 0) + implicit_zeros
        pairs = [(v, m) for v, m in d.items() if v > 0]
        if n0 > 0:
            pairs.append((0, n0))
        out.append(GeneCounts.from_pairs(names[g], pairs, n_cells))
    return out


def _load_dense(source: CountMatrixSource) -> list[GeneCounts]:
    genes_as_rows = source.orientation is Orientation.GENES_AS_ROWS
    delim = source.delimiter
    header: list[str] | None = None
    rownames: list[str] = []
    rows: list[list[int]] = []
    width = None
    with open(source.path) as fh:
        line_no = 0
        for line in fh:
            line_no += 1
            if not line.strip():
                continue
            fields = line.rstrip("\n").rstrip("\r").split(delim)
            if header is None and source.has_header:
                header = fields[1:] if source.has_rownames else fields
                continue
            if source.has_rownames:
                rownames.append(fields[0])
                fields = fields[1:]
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise IngestError(
                    f"line {line_no}: expected {width} entries, got {len(fields)}"
                )
            row = []
            for j, token in enumerate(fields):
                r_idx = len(rows)
                where = (
                    f"gene {r_idx}, cell {j}" if genes_as_rows
                    else f"gene {j}, cell {r_idx}"
                )
                v = _parse_count_token(token, line_no, where)
                if v < 0:
                    raise IngestError(f"line {line_no}: negative entry at {where}")
                row.append(v)
            rows.append(row)
    if not rows:
        raise IngestError("empty matrix")
    mat = np.array(rows, dtype=np.int64)
    if genes_as_rows:
        gene_vectors = mat
        names = rownames if (source.has_rownames and rownames) else None
    else:
        gene_vectors = mat.T
        names = header
    if source.gene_names is not None:
        names = list(source.gene_names)
    if names is None:
        names = [f"gene_{i}" for i in range(gene_vectors.shape[0])]
    if len(names) != gene_vectors.shape[0]:
        raise IngestError("gene name count does not match matrix")
    names = _dedupe_names(list(names))
    return [
        GeneCounts.from_values(names[i], gene_vectors[i])
        for i in range(gene_vectors.shape[0])
    ]
