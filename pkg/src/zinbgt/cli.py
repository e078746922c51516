"""Command-line orchestration: ingest -> parallel fit -> optional diagnostics
-> tabular/JSON outputs and plot-data exports.

Exit codes: 0 success, 2 input error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from . import __version__, export
from .diagnostics import DiagConfig, DiagnosticResult, diagnose_gene
from .fit import FitConfig, fit_genes, gene_seed_sequence
from .ingest import (
    CountMatrixSource,
    IngestError,
    MatrixFormat,
    Orientation,
    Triviality,
    classify_trivial,
    load_matrix,
)
from .model import Submodel, ZinbgtParams
from .simulate import (
    SimKind,
    SimSpec,
    default_params_table,
    read_params_table,
    simulate_nb_mixture_dataset,
    simulate_zinbgt_dataset,
    write_dense_tsv,
    write_hyperdraw_table,
    write_matrix_market,
    write_params_table,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_IO = 3

_DELIMS = {"csv": ",", "tsv": "\t"}


def _source_from_args(args, path=None) -> CountMatrixSource:
    path = Path(path or args.input)
    if args.format == "mtx":
        fmt = MatrixFormat.MATRIX_MARKET
        delim = "\t"
    else:
        fmt = MatrixFormat.DENSE_DELIMITED
        delim = _DELIMS[args.format]
    orient = (Orientation.GENES_AS_ROWS if args.genes_as == "rows"
              else Orientation.GENES_AS_COLS)
    return CountMatrixSource(
        path=path, format=fmt, orientation=orient, delimiter=delim,
        has_header=args.has_header, has_rownames=args.has_rownames,
    )


def _add_input_args(p):
    p.add_argument("--input", required=True, help="count matrix file")
    p.add_argument("--format", choices=["mtx", "csv", "tsv"], default="mtx")
    p.add_argument("--genes-as", choices=["rows", "cols"], default="rows")
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--has-rownames", action="store_true")


def _build_parser():
    parser = argparse.ArgumentParser(prog="zinbgt")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit every gene and optionally diagnose")
    _add_input_args(p)
    p.add_argument("--diagnostics", choices=["none", "wass", "full"],
                   default="full")
    p.add_argument("--alpha", type=float, choices=[1.0, 2.0], default=1.0)
    p.add_argument("--transform", choices=["identity", "log1p"],
                   default="log1p")
    p.add_argument("--boot", type=int, default=100,
                   help="bootstrap replicates per gene")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1,
                   help="worker count (-1 = all cores)")
    p.add_argument("--init", choices=["median", "even", "exponential", "random"],
                   default="median")
    p.add_argument("--min-max-count", type=int, default=0,
                   help="diagnose only genes whose max count exceeds this")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    p.add_argument("--kind", choices=["zinbgt", "nb-mixture"], default="zinbgt")
    p.add_argument("--genes", type=int, default=100)
    p.add_argument("--cells", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--params-table", help="TSV of parameter vectors (zinbgt kind)")
    p.add_argument("--format", choices=["mtx", "tsv"], default="mtx")
    p.add_argument("--out", required=True)

    p = sub.add_parser("export-plots", help="derive tidy plot-data files")
    p.add_argument("--results", required=True, help="results.tsv from fit")
    p.add_argument("--out", required=True)
    p.add_argument("--kinds", default="ternary,hist2d,scatter",
                   help="comma list of ternary,hist2d,scatter,pmf")
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--ternary-resolution", type=int, default=40)
    p.add_argument("--genes", default="",
                   help="comma list of gene ids for pmf export (needs --input)")
    p.add_argument("--input", help="count matrix (pmf export only)")
    p.add_argument("--format", choices=["mtx", "csv", "tsv"], default="mtx")
    p.add_argument("--genes-as", choices=["rows", "cols"], default="rows")
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--has-rownames", action="store_true")
    return parser


def _result_row(gene, fit, diag) -> dict:
    theta = fit.theta
    flags = export.boundary_flags(theta) + [f for f in fit.flags]
    row = {
        "gene_id": gene.gene_id,
        "n_cells": gene.n_cells,
        "n_unique": gene.n_unique,
        "max_count": gene.max_count,
        "mean_count": gene.mean,
        "submodel": fit.submodel.value,
        "p0": theta.p0, "p1": theta.p1, "p2": theta.p2,
        "m": theta.m, "d": theta.d, "mu_g": theta.mu_g,
        "loglik": fit.loglik, "bic": fit.bic,
        "n_iter": fit.n_iter, "converged": fit.converged,
        "boundary_flags": ";".join(flags),
        "wasserstein": None, "p_b": None, "diag_skipped_reason": None,
    }
    if diag is not None:
        row["wasserstein"] = diag.wasserstein
        row["p_b"] = diag.p_b
        row["diag_skipped_reason"] = diag.reason
    return row


def diagnose_genes(genes, fits, diag_config: DiagConfig, tier: str = "full",
                   min_max_count: int = 0, n_jobs: int = 1,
                   global_seed: int = 0):
    """Diagnose fitted genes in gene order with per-gene seed streams, so the
    result is independent of worker count.  ``tier='none'`` returns all None.
    """
    if tier == "none":
        return [None] * len(genes)

    def one(i):
        g = genes[i]
        if classify_trivial(g) is not Triviality.GENERAL:
            return diagnose_gene(g, fits[i].theta, diag_config, tier=tier)
        if min_max_count and g.max_count <= min_max_count:
            return DiagnosticResult(wasserstein=None, p_b=None, n_boot=0,
                                    skipped=True, reason="max-count-filter")
        rng = np.random.default_rng(gene_seed_sequence(global_seed, i, 1))
        return diagnose_gene(g, fits[i].theta, diag_config, rng=rng, tier=tier)

    if n_jobs == 1:
        return [one(i) for i in range(len(genes))]
    return Parallel(n_jobs=n_jobs, batch_size="auto")(
        delayed(one)(i) for i in range(len(genes)))


def run_pipeline(genes, fit_config: FitConfig, diag_config: DiagConfig,
                 diag_tier: str = "full", min_max_count: int = 0,
                 n_jobs: int = 1, global_seed: int = 0):
    """Fit then diagnose; returns (fits, diags, rows)."""
    fits = fit_genes(genes, fit_config, n_jobs=n_jobs, global_seed=global_seed)
    diags = diagnose_genes(genes, fits, diag_config, tier=diag_tier,
                           min_max_count=min_max_count, n_jobs=n_jobs,
                           global_seed=global_seed)
    rows = [_result_row(g, f, d) for g, f, d in zip(genes, fits, diags)]
    return fits, diags, rows


def _cmd_fit(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    timings = {}

    t0 = time.perf_counter()
    genes = load_matrix(_source_from_args(args))
    timings["ingest_s"] = time.perf_counter() - t0

    fit_config = FitConfig(init_strategy=args.init, seed=args.seed)
    diag_config = DiagConfig(alpha=args.alpha, transform=args.transform,
                             n_boot=args.boot, seed=args.seed)

    t0 = time.perf_counter()
    fits = fit_genes(genes, fit_config, n_jobs=args.threads,
                     global_seed=args.seed)
    timings["fit_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    diags = diagnose_genes(genes, fits, diag_config, tier=args.diagnostics,
                           min_max_count=args.min_max_count,
                           n_jobs=args.threads, global_seed=args.seed)
    rows = [_result_row(g, f, d) for g, f, d in zip(genes, fits, diags)]
    timings["diagnostics_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    export.write_results_tsv(rows, out / "results.tsv")
    with open(out / "results.json", "w") as fh:
        json.dump(rows, fh, indent=1)
    timings["write_s"] = time.perf_counter() - t0

    manifest = {
        "tool": "zinbgt",
        "version": __version__,
        "command": "fit",
        "input": {"path": str(args.input), "format": args.format,
                  "genes_as": args.genes_as, "has_header": args.has_header,
                  "has_rownames": args.has_rownames},
        "fit_config": vars(fit_config).copy(),
        "diagnostics": (None if args.diagnostics == "none"
                        else {**vars(diag_config), "tier": args.diagnostics,
                              "min_max_count": args.min_max_count}),
        "threads": args.threads,
        "seed": args.seed,
        "outputs": ["results.tsv", "results.json"],
        "timings": timings,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1)
    print(f"fit: {len(genes)} genes -> {out/'results.tsv'}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "zinbgt":
        if args.params_table:
            thetas = read_params_table(args.params_table)
            labels = None
        else:
            thetas, labels = default_params_table()
            if args.genes != len(thetas):
                reps = [thetas[i % len(thetas)] for i in range(args.genes)]
                labs = [labels[i % len(labels)] for i in range(args.genes)]
                thetas, labels = reps, labs
        spec = SimSpec(SimKind.FROM_PARAMS_TABLE, n_cells=args.cells,
                       n_genes=len(thetas), seed=args.seed,
                       params_table=thetas)
        genes = simulate_zinbgt_dataset(spec)
        write_params_table(thetas, out / "truth_params.tsv", labels)
        truth_file = "truth_params.tsv"
    else:
        spec = SimSpec(SimKind.NB_MIXTURE_MISSPEC, n_cells=args.cells,
                       n_genes=args.genes, seed=args.seed)
        genes, truths = simulate_nb_mixture_dataset(spec)
        write_hyperdraw_table(truths, out / "truth_hyperdraws.tsv")
        truth_file = "truth_hyperdraws.tsv"

    if args.format == "mtx":
        counts_file = "counts.mtx"
        write_matrix_market(genes, out / counts_file)
    else:
        counts_file = "counts.tsv"
        write_dense_tsv(genes, out / counts_file)

    manifest = {
        "tool": "zinbgt", "version": __version__, "command": "simulate",
        "kind": args.kind, "n_genes": len(genes), "n_cells": args.cells,
        "seed": args.seed, "format": args.format,
        "outputs": [counts_file, truth_file],
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1)
    print(f"simulate: {len(genes)} genes x {args.cells} cells -> {out/counts_file}")
    return EXIT_OK


_HIST2D_PAIRS = [
    ("p0", "p1"), ("p0", "p2"), ("p1", "p2"),
    ("p0", "m"), ("p0", "d"), ("p0", "mu_g"),
    ("p1", "m"), ("p1", "d"), ("p1", "mu_g"),
    ("p2", "m"), ("p2", "d"), ("p2", "mu_g"),
    ("m", "d"), ("m", "mu_g"), ("d", "mu_g"),
]


def _cmd_export_plots(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = export.read_results_tsv(args.results)
    kinds = {k.strip() for k in args.kinds.split(",") if k.strip()}
    wanted_genes = [g for g in args.genes.split(",") if g]
    if wanted_genes:
        kinds.add("pmf")
    written = []

    if "ternary" in kinds:
        export.write_ternary(rows, out / "ternary.tsv", args.ternary_resolution)
        written.append("ternary.tsv")
    if "hist2d" in kinds:
        for x, y in _HIST2D_PAIRS:
            name = f"hist2d_{x}_{y}.tsv"
            export.write_hist2d(rows, x, y, out / name, args.bins)
            written.append(name)
    if "scatter" in kinds:
        export.write_scatter(rows, out / "scatter.tsv")
        written.append("scatter.tsv")
    if "pmf" in kinds:
        if not wanted_genes:
            raise IngestError("pmf export requires --genes")
        if not args.input:
            raise IngestError("pmf export requires --input")
        genes = load_matrix(_source_from_args(args))
        by_id = {g.gene_id: g for g in genes}
        by_row = {r["gene_id"]: r for r in rows}
        for gid in wanted_genes:
            if gid not in by_id or gid not in by_row:
                raise IngestError(f"unknown gene id {gid!r}")
            r = by_row[gid]
            theta = ZinbgtParams(r["p0"], r["p1"], r["p2"],
                                 r["m"], r["d"], r["mu_g"])
            name = f"pmf_{gid}.tsv"
            export.write_pmf_table(by_id[gid], theta, out / name)
            written.append(name)
    print(f"export-plots: wrote {len(written)} files to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "fit":
            return _cmd_fit(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_export_plots(args)
    except IngestError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
