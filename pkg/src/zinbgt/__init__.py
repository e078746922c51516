"""Per-gene count-mixture fitting with Wasserstein goodness-of-fit diagnostics."""

from ._kernels import backend
from .diagnostics import (
    DiagConfig,
    DiagnosticResult,
    diagnose_gene,
    empirical_pmf,
    gene_wasserstein,
    p_b_value,
    wasserstein_discrete,
)
from .fit import (
    FitConfig,
    FitFailure,
    FitResult,
    PoissonMleTable,
    Responsibilities,
    e_step,
    fit_gene,
    fit_genes,
    fit_submodel,
    initialize,
    m_step_geometric,
    m_step_nb,
    m_step_proportions,
    solve_hurdle_poisson_m,
)
from .ingest import (
    CountMatrixSource,
    GeneCounts,
    IngestError,
    MatrixFormat,
    Orientation,
    Triviality,
    classify_trivial,
    load_matrix,
)
from .model import (
    NEG_INF,
    DiscretePmf,
    Submodel,
    ZinbgtParams,
    loglik,
    pmf_hurdle_geom,
    pmf_hurdle_nb,
    pmf_zinbgt,
    sample,
    truncated_pmf,
)
from .simulate import (
    NbMixtureTruth,
    SimKind,
    SimSpec,
    default_params_table,
    simulate_nb_mixture_dataset,
    simulate_zinbgt_dataset,
)

__version__ = "0.1.0"
