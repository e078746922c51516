"""Synthetic dataset generation: mixture-parameterised genes for recovery and
calibration studies, and the two-NB-mixture misspecification family used to
measure diagnostic power.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .ingest import GeneCounts
from .model import Submodel, ZinbgtParams, sample


class SimKind(enum.Enum):
    FROM_PARAMS_TABLE = "zinbgt"
    NB_MIXTURE_MISSPEC = "nb-mixture"


@dataclass
class NbMixtureTruth:
    """Ground-truth hyperdraws for one misspecification gene."""
    rho: float
    m1: float
    m2: float
    d1: float
    d2: float


@dataclass
class SimSpec:
    kind: SimKind
    n_cells: int
    n_genes: int
    seed: int = 0
    params_table: list[ZinbgtParams] | None = None
    # misspecification hyperparameters: exponential means and Beta shape pair
    exp_mean: float = 10.0
    beta_shape: tuple[float, float] = (2.0, 2.0)

    def __post_init__(self):
        if self.n_cells < 1:
            raise ValueError("n_cells must be >= 1")
        if self.kind is SimKind.FROM_PARAMS_TABLE:
            if self.params_table is None:
                raise ValueError("params_table required for FromParamsTable")
            if len(self.params_table) != self.n_genes:
                raise ValueError("n_genes must equal length of params_table")


def _gene_rng(seed: int, gene_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, gene_index)))


def simulate_zinbgt_dataset(spec: SimSpec) -> list[GeneCounts]:
    """One gene per table row; per-gene seed streams keep output deterministic
    regardless of worker count or evaluation order."""
    if spec.kind is not SimKind.FROM_PARAMS_TABLE:
        raise ValueError("spec.kind must be FromParamsTable")
    genes = []
    for j, theta in enumerate(spec.params_table):
        if not isinstance(theta, ZinbgtParams):
            raise ValueError(f"params_table[{j}] is not a parameter vector")
        draws = sample(theta, spec.n_cells, _gene_rng(spec.seed, j))
        genes.append(GeneCounts.from_values(f"gene_{j}", draws))
    return genes


def _sample_plain_nb(rng, n, m, d):
    if d <= 1.0 + _kernels.POISSON_D_EPS:
        return rng.poisson(m, size=n)
    r = m / (d - 1.0)
    return rng.negative_binomial(r, 1.0 / d, size=n)


def simulate_nb_mixture_dataset(spec: SimSpec):
    """Mixtures of two plain (non-hurdle) negative binomials.

    Per gene: m1 ~ Exp(mean 10); m2 = m1*(1 + Exp(mean 10)); d1, d2 ~ 1 +
    Exp(mean 10); rho ~ Beta(2,2).  Returns (genes, ground-truth hyperdraws).
    """
    if spec.kind is not SimKind.NB_MIXTURE_MISSPEC:
        raise ValueError("spec.kind must be NbMixtureMisspec")
    genes = []
    truths = []
    a, b = spec.beta_shape
    for j in range(spec.n_genes):
        rng = _gene_rng(spec.seed, j)
        m1 = rng.exponential(spec.exp_mean)
        m2 = m1 * (1.0 + rng.exponential(spec.exp_mean))
        d1 = 1.0 + rng.exponential(spec.exp_mean)
        d2 = 1.0 + rng.exponential(spec.exp_mean)
        rho = rng.beta(a, b)
        comp1 = rng.random(spec.n_cells) < rho
        draws = np.empty(spec.n_cells, dtype=np.int64)
        n1 = int(comp1.sum())
        if n1:
            draws[comp1] = _sample_plain_nb(rng, n1, m1, d1)
        if spec.n_cells - n1:
            draws[~comp1] = _sample_plain_nb(rng, spec.n_cells - n1, m2, d2)
        genes.append(GeneCounts.from_values(f"gene_{j}", draws))
        truths.append(NbMixtureTruth(rho=rho, m1=m1, m2=m2, d1=d1, d2=d2))
    return genes, truths


# ---------------------------------------------------------------------------
# Versioned default parameter table (v1)

#: Per-class plausible ranges for the default table; documented so experiments
#: can cite an exact, reproducible table (version 1).
_TABLE_V1_CLASSES = (
    (Submodel.FULL_NB_GEOM, 200),
    (Submodel.POISSON_GEOM, 200),
    (Submodel.NB_ONLY, 200),
    (Submodel.POISSON_ONLY, 200),
    (Submodel.GEOM_ONLY, 9),
)


def default_params_table(seed: int = 20240809, version: int = 1):
    """809 parameter vectors: 200 from each non-trivial submodel class except
    the pure-geometric one, which contributes nine.  Returns (thetas, labels).
    """
    if version != 1:
        raise ValueError(f"unknown table version {version}")
    rng = np.random.default_rng(np.random.SeedSequence((seed, version)))
    thetas: list[ZinbgtParams] = []
    labels: list[Submodel] = []
    for kind, count in _TABLE_V1_CLASSES:
        for _ in range(count):
            p0 = rng.uniform(0.05, 0.85)
            rest = 1.0 - p0
            if kind is Submodel.FULL_NB_GEOM:
                p1 = rest * rng.uniform(0.3, 0.7)
                p2 = rest - p1
                m = rng.uniform(2.0, 15.0)
                d = rng.uniform(1.5, 6.0)
                mu_g = m * rng.uniform(3.0, 8.0)
                theta = ZinbgtParams(p0, p1, p2, m, d, mu_g)
            elif kind is Submodel.POISSON_GEOM:
                p1 = rest * rng.uniform(0.3, 0.7)
                p2 = rest - p1
                m = rng.uniform(1.0, 8.0)
                mu_g = max(4.0 * m, rng.uniform(8.0, 40.0))
                theta = ZinbgtParams(p0, p1, p2, m, 1.0, mu_g)
            elif kind is Submodel.NB_ONLY:
                m = rng.uniform(0.5, 20.0)
                d = rng.uniform(1.5, 8.0)
                theta = ZinbgtParams(p0, rest, 0.0, m, d, 0.0)
            elif kind is Submodel.POISSON_ONLY:
                m = rng.uniform(0.2, 10.0)
                theta = ZinbgtParams(p0, rest, 0.0, m, 1.0, 0.0)
            else:  # GEOM_ONLY, stored as m = d - 1
                mu = rng.uniform(0.5, 5.0)
                theta = ZinbgtParams(p0, rest, 0.0, mu, 1.0 + mu, 0.0)
            thetas.append(theta)
            labels.append(kind)
    return thetas, labels


# ---------------------------------------------------------------------------
# Writers (formats readable by ingest)

def write_dense_tsv(genes: list[GeneCounts], path, delimiter: str = "\t"):
    """Genes as rows with a name column and a header of cell ids."""
    path = Path(path)
    n_cells = genes[0].n_cells
    with open(path, "w") as fh:
        fh.write(delimiter.join(["gene"] + [f"cell_{i}" for i in range(n_cells)]))
        fh.write("\n")
        for g in genes:
            if g.n_cells != n_cells:
                raise ValueError("inconsistent cell counts across genes")
            row = g.expand()
            fh.write(g.gene_id + delimiter
                     + delimiter.join(str(int(v)) for v in row) + "\n")


def write_matrix_market(genes: list[GeneCounts], path):
    """Coordinate integer format, genes as rows, 1-based indices."""
    path = Path(path)
    n_cells = genes[0].n_cells
    entries = []
    for i, g in enumerate(genes):
        cell = 0
        for v, mult in zip(g.values, g.mults):
            if v == 0:
                cell += int(mult)
                continue
            for _ in range(int(mult)):
                entries.append((i + 1, cell + 1, int(v)))
                cell += 1
    with open(path, "w") as fh:
        fh.write("%%MatrixMarket matrix coordinate integer general\n")
        fh.write(f"{len(genes)} {n_cells} {len(entries)}\n")
        for r, c, v in entries:
            fh.write(f"{r} {c} {v}\n")


def write_params_table(thetas: list[ZinbgtParams], path, labels=None):
    path = Path(path)
    with open(path, "w") as fh:
        cols = ["gene_id", "p0", "p1", "p2", "m", "d", "mu_g"]
        if labels is not None:
            cols.append("submodel")
        fh.write("\t".join(cols) + "\n")
        for j, th in enumerate(thetas):
            row = [f"gene_{j}"] + [repr(float(v)) for v in th.as_tuple()]
            if labels is not None:
                row.append(labels[j].value)
            fh.write("\t".join(row) + "\n")


def read_params_table(path) -> list[ZinbgtParams]:
    thetas = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        idx = {name: header.index(name) for name in
               ("p0", "p1", "p2", "m", "d", "mu_g")}
        for line in fh:
            if not line.strip():
                continue
            f = line.rstrip("\n").split("\t")
            thetas.append(ZinbgtParams(*(float(f[idx[c]]) for c in
                                         ("p0", "p1", "p2", "m", "d", "mu_g"))))
    return thetas


def write_hyperdraw_table(truths: list[NbMixtureTruth], path):
    path = Path(path)
    with open(path, "w") as fh:
        fh.write("gene_id\trho\tm1\tm2\td1\td2\n")
        for j, t in enumerate(truths):
            vals = "\t".join(repr(float(v)) for v in
                             (t.rho, t.m1, t.m2, t.d1, t.d2))
            fh.write(f"gene_{j}\t{vals}\n")
