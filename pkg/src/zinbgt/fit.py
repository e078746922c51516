"""Per-gene maximum-likelihood fitting: EM for the two-component mixtures,
closed-form / numeric direct MLEs for the restricted submodels, and minimum-BIC
submodel selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from . import _kernels
from .ingest import GeneCounts, Triviality, classify_trivial
from .model import (
    FITTED_SUBMODELS,
    NEG_INF,
    Submodel,
    ZinbgtParams,
    loglik,
    nonzero_log_mass,
)

INIT_STRATEGIES = ("median", "even", "exponential", "random")

#: BIC ties within this slack resolve toward fewer free parameters.
BIC_TIE_TOL = 1e-9

_POISSON_CUTOFF = 30.0
_POISSON_GRID_SIZE = 3000


class FitFailure(Exception):
    """A submodel cannot represent the observed counts (zero model mass)."""


@dataclass
class FitConfig:
    init_strategy: str = "median"
    max_iter: int = 500
    loglik_rel_tol: float = 1e-8
    param_abs_tol: float = 1e-6
    seed: int = 0
    m_min: float = 1e-8
    d_max: float = 1e6
    mu_g_max: float = 1e9
    track_loglik: bool = False

    def __post_init__(self):
        if self.init_strategy not in INIT_STRATEGIES:
            raise ValueError(f"unknown init strategy {self.init_strategy!r}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.loglik_rel_tol <= 0 or self.param_abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass
class Responsibilities:
    """Posterior component weights for the non-zero unique values.

    Zeros belong to the constant-zero component with probability one and are
    not stored.  ``gamma1`` is the hurdle-NB weight per unique non-zero value
    (for the random strategy, the mean over that value's cells).
    """

    values: np.ndarray
    weights: np.ndarray
    gamma1: np.ndarray

    @property
    def gamma2(self) -> np.ndarray:
        return 1.0 - self.gamma1


@dataclass
class FitResult:
    theta: ZinbgtParams
    submodel: Submodel
    loglik: float
    bic: float
    n_iter: int
    converged: bool
    per_submodel_bic: dict[Submodel, float] | None = None
    flags: tuple[str, ...] = ()
    loglik_trace: list[float] | None = None


class PoissonMleTable:
    """Interpolation grid inverting x_tilde(m) = m / (1 - exp(-m)).

    3000 m values log-spaced between m_min and the cutoff 30; above the
    cutoff the identity approximation m = x_tilde is used.
    """

    def __init__(self, m_min: float = 1e-8, cutoff: float = _POISSON_CUTOFF,
                 n_grid: int = _POISSON_GRID_SIZE):
        self.m_min = m_min
        self.cutoff = cutoff
        self.m_grid = np.logspace(math.log10(m_min), math.log10(cutoff), n_grid)
        self.x_tilde_grid = self.m_grid / -np.expm1(-self.m_grid)

    def solve(self, x_tilde: float) -> float:
        if x_tilde < 1.0 - 1e-9:
            raise ValueError(f"x_tilde={x_tilde} < 1 is impossible for positive counts")
        if x_tilde > self.cutoff:
            return float(x_tilde)
        return float(np.interp(x_tilde, self.x_tilde_grid, self.m_grid))


_DEFAULT_TABLE: PoissonMleTable | None = None


def default_poisson_table() -> PoissonMleTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = PoissonMleTable()
    return _DEFAULT_TABLE


def solve_hurdle_poisson_m(x_tilde: float, table: PoissonMleTable | None = None) -> float:
    """Invert the hurdle-Poisson stationarity condition m/(1-e^-m) = x_tilde."""
    return (table or default_poisson_table()).solve(x_tilde)


# ---------------------------------------------------------------------------
# E and M steps

def _e_step_arrays(nz: np.ndarray, w: np.ndarray,
                   theta: ZinbgtParams) -> Responsibilities:
    if theta.p1 + theta.p2 <= 0.0:
        raise FitFailure("no non-zero component active")
    if nz.size == 0:
        raise ValueError("e_step requires at least one non-zero value")
    gamma1 = _kernels.mixture_gamma1(nz, theta.p1, theta.p2,
                                     theta.m, theta.d, theta.mu_g)
    dead = np.isnan(gamma1)
    if np.any(dead):
        raise FitFailure(
            f"observed value {int(nz[dead][0])} has zero mass under both components"
        )
    return Responsibilities(nz, w, gamma1)


def e_step(counts: GeneCounts, theta: ZinbgtParams) -> Responsibilities:
    """Posterior component weights for the non-zero values under theta."""
    return _e_step_arrays(counts.nonzero_values.astype(np.float64),
                          counts.nonzero_mults.astype(np.float64), theta)


def m_step_proportions(counts: GeneCounts, resp: Responsibilities):
    """Closed-form weight update; p0 stays pinned at the zero fraction."""
    n = counts.n_cells
    p0 = counts.n_zero / n
    s1 = float(np.dot(resp.weights, resp.gamma1))
    p1 = min(s1 / n, 1.0 - p0)
    p2 = max(0.0, 1.0 - p0 - p1)
    return p0, p1, p2

def m_step_geometric(counts: GeneCounts, resp: Responsibilities) -> float | None:
    """Weighted mean of (x-1); None when the component carries no weight."""
    s2 = float(np.dot(resp.weights, resp.gamma2))
    if s2 <= 1e-12:
        return None
    return float(np.dot(resp.weights * resp.gamma2, resp.values - 1.0)) / s2


def _optimize_nb(xs, ws, current, config: FitConfig, step: float = 0.05,
                 xatol: float = 1e-8, maxfev: int = 600):
    """Simplex maximisation of the weighted hurdle-NB log-likelihood on the
    (log m, log(d-1)) chart; never returns a point worse than the warm start.
    """
    m0 = min(max(current[0], config.m_min), 1e15)
    d0 = min(max(current[1], 1.0 + 1e-9), config.d_max)
    z0, z1, fmin = _kernels.optimize_nb(
        xs, ws, math.log(m0), math.log(d0 - 1.0),
        config.m_min, config.d_max, step, xatol, 1e-10, maxfev,
    )
    m_hat = min(max(math.exp(min(z0, 60.0)), config.m_min), 1e15)
    d_hat = min(1.0 + math.exp(min(z1, 60.0)), config.d_max)
    cand = _kernels.nb_weighted_loglik(xs, ws, m_hat, d_hat)
    base = _kernels.nb_weighted_loglik(xs, ws, m0, d0)
    if not np.isfinite(cand) or cand < base:
        return (m0, d0), False
    return (m_hat, d_hat), True


def m_step_nb(counts: GeneCounts, resp: Responsibilities, current, config: FitConfig):
    """(m, d) update via derivative-free simplex, warm-started at ``current``."""
    return _optimize_nb(resp.values, resp.weights * resp.gamma1, current, config)


# ---------------------------------------------------------------------------
# Initialization strategies

def _weighted_median(values: np.ndarray, weights: np.ndarray) -> float:
    order = np.argsort(values)
    v = values[order]
    w = weights[order]
    cum = np.cumsum(w)
    total = cum[-1]
    lo = v[np.searchsorted(cum, (total - 1) // 2 + 1)]
    hi = v[np.searchsorted(cum, total // 2 + 1)]
    return float(lo + hi) / 2.0


def _weighted_var(values: np.ndarray, weights: np.ndarray) -> float:
    total = float(weights.sum())
    if total <= 1:
        return 0.0
    mean = float(np.dot(weights, values)) / total
    ss = float(np.dot(weights, (values - mean) ** 2))
    return ss / (total - 1.0)


def initialize(counts: GeneCounts, strategy: str, rng=None,
               d_fixed: float | None = None):
    """Initial (theta, responsibilities) per strategy.

    The median strategy builds a full parameter guess and takes one E-step;
    the others construct responsibilities directly (theta comes out of the
    first M-step).  ``d_fixed`` pins the initial dispersion (Poisson submodel).
    """
    nz = counts.nonzero_values.astype(np.float64)
    w = counts.nonzero_mults.astype(np.float64)
    if nz.size == 0:
        raise ValueError("initialization requires a non-zero value")
    if strategy == "median":
        p0 = counts.zero_fraction
        m0 = _weighted_median(nz, w)
        mu0 = float(nz[-1])
        var = _weighted_var(nz, w)
        d0 = max(1.0, var / m0) if d_fixed is None else d_fixed
        half = (1.0 - p0) / 2.0
        theta0 = ZinbgtParams(p0, half, half, m0, d0, mu0)
        return theta0, e_step(counts, theta0)
    if strategy == "even":
        gamma1 = np.full(nz.shape, 0.5)
    elif strategy == "exponential":
        gamma1 = 10.0 ** (1.0 - nz)
    elif strategy == "random":
        if rng is None:
            rng = np.random.default_rng(0)
        # per-cell uniform draws; only their per-value mean feeds the M-step
        gamma1 = np.array([rng.random(int(k)).mean() for k in w])
    else:
        raise ValueError(f"unknown init strategy {strategy!r}")
    return None, Responsibilities(nz, w, gamma1)


# ---------------------------------------------------------------------------
# Submodel fitting

def _bic(ll: float, k: int, n: int) -> float:
    if ll == NEG_INF:
        return math.inf
    return k * math.log(n) - 2.0 * ll


def _direct_result(counts, kind, theta, config) -> FitResult:
    ll = loglik(counts, theta)
    return FitResult(
        theta=theta, submodel=kind, loglik=ll,
        bic=_bic(ll, kind.n_free_params, counts.n_cells),
        n_iter=0, converged=True,
    )


def _sentinel_result(counts, kind, reason: str) -> FitResult:
    theta = ZinbgtParams(counts.zero_fraction, 1.0 - counts.zero_fraction,
                         0.0, 0.0, 1.0, 0.0)
    return FitResult(
        theta=theta, submodel=kind, loglik=NEG_INF, bic=math.inf,
        n_iter=0, converged=False, flags=(reason,),
    )


def _moment_start(nz, w, gamma1, config):
    wg = w * gamma1
    s1 = float(wg.sum())
    m0 = max(config.m_min, float(np.dot(wg, nz)) / s1)
    var = _weighted_var(nz, wg) if s1 > 1 else 0.0
    d0 = min(max(1.0 + 1e-6, var / m0), config.d_max)
    return m0, d0


def _run_em(counts: GeneCounts, kind: Submodel, config: FitConfig, rng=None) -> FitResult:
    nz = counts.nonzero_values.astype(np.float64)
    w = counts.nonzero_mults.astype(np.float64)
    n = counts.n_cells
    p0 = counts.zero_fraction
    is_poisson = kind is Submodel.POISSON_GEOM

    theta0, gamma = initialize(
        counts, config.init_strategy, rng=rng,
        d_fixed=1.0 if is_poisson else None,
    )
    if theta0 is not None:
        m_cur, d_cur, mu_cur = theta0.m, theta0.d, theta0.mu_g
    else:
        m_cur = d_cur = mu_cur = None

    flags: set[str] = set()
    trace: list[float] | None = [] if config.track_loglik else None
    prev_ll = NEG_INF
    prev_vec = None
    theta = None
    converged = False
    n_iter = 0

    for n_iter in range(1, config.max_iter + 1):
        g1 = gamma.gamma1
        p0_, p1, p2 = m_step_proportions(counts, gamma)

        mu_new = m_step_geometric(counts, gamma)
        if mu_new is None:
            mu_new = 0.0
            p2 = 0.0
            p1 = 1.0 - p0
            flags.add("geom-deactivated")
        elif mu_new > config.mu_g_max:
            mu_new = config.mu_g_max
            flags.add("mu_g-at-bound")

        s1 = float(np.dot(w, g1))
        if s1 > 1e-12:
            if is_poisson:
                x_tilde = max(1.0, float(np.dot(w * g1, nz)) / s1)
                m_new = solve_hurdle_poisson_m(x_tilde)
                if m_cur is not None:
                    # interpolation error must never undo EM monotonicity
                    wg = w * g1
                    if (_kernels.nb_weighted_loglik(nz, wg, m_new, 1.0)
                            < _kernels.nb_weighted_loglik(nz, wg, m_cur, 1.0)):
                        m_new = m_cur
                d_new = 1.0
            else:
                if m_cur is None:
                    start = _moment_start(nz, w, g1, config)
                    step, xatol = 0.05, 1e-8
                else:
                    # warm restart near the previous optimum: small simplex,
                    # tolerance matched to the EM parameter tolerance
                    start = (m_cur, d_cur)
                    step, xatol = 1e-3, 1e-7
                (m_new, d_new), ok = _optimize_nb(nz, w * g1, start, config,
                                                  step=step, xatol=xatol)
                if not ok:
                    flags.add("nb-optim-fallback")
        else:
            flags.add("nb-deactivated")
            m_new = m_cur if m_cur is not None else 1.0
            d_new = d_cur if d_cur is not None else 1.0
            p1 = 0.0
            p2 = 1.0 - p0

        theta = ZinbgtParams(p0, p1, p2, m_new, d_new, mu_new)
        gamma = _e_step_arrays(nz, w, theta)
        ll = loglik(counts, theta)
        if trace is not None:
            trace.append(ll)

        vec = np.array([p1, p2, m_new, d_new, mu_new])
        if prev_vec is not None:
            rel = abs(ll - prev_ll) / max(1.0, abs(prev_ll))
            if rel < config.loglik_rel_tol or \
                    float(np.max(np.abs(vec - prev_vec))) < config.param_abs_tol:
                converged = True
                break
        prev_ll, prev_vec = ll, vec
        m_cur, d_cur, mu_cur = m_new, d_new, mu_new

    if not is_poisson and theta.p1 > 0.0:
        # final tight polish of (m, d); a pure M-step, so still monotone
        (m_new, d_new), _ = _optimize_nb(
            nz, w * gamma.gamma1, (theta.m, theta.d), config,
            step=1e-3, xatol=1e-8)
        if (m_new, d_new) != (theta.m, theta.d):
            cand = ZinbgtParams(theta.p0, theta.p1, theta.p2,
                                m_new, d_new, theta.mu_g)
            if loglik(counts, cand) >= loglik(counts, theta):
                theta = cand

    ll = loglik(counts, theta)
    if theta.m <= config.m_min * (1 + 1e-9):
        flags.add("m-at-bound")
    if theta.d >= config.d_max * (1 - 1e-9):
        flags.add("d-at-bound")
    return FitResult(
        theta=theta, submodel=kind, loglik=ll,
        bic=_bic(ll, kind.n_free_params, n),
        n_iter=n_iter, converged=converged,
        flags=tuple(sorted(flags)), loglik_trace=trace,
    )


def fit_submodel(counts: GeneCounts, kind: Submodel, config: FitConfig,
                 rng=None) -> FitResult:
    """Fit one submodel to a general (non-trivial) gene."""
    n = counts.n_cells
    p0 = counts.zero_fraction
    nz = counts.nonzero_values.astype(np.float64)
    w = counts.nonzero_mults.astype(np.float64)

    if kind is Submodel.CONSTANT_ONE_ONLY:
        if counts.max_count > 1:
            return _sentinel_result(counts, kind, "counts-above-one")
        theta = ZinbgtParams(p0, 1.0 - p0, 0.0, 0.0, 1.0, 0.0)
        return _direct_result(counts, kind, theta, config)

    if kind is Submodel.POISSON_ONLY:
        xbar = float(np.dot(w, nz)) / float(w.sum())
        m = solve_hurdle_poisson_m(max(1.0, xbar))
        theta = ZinbgtParams(p0, 1.0 - p0, 0.0, m, 1.0, 0.0)
        return _direct_result(counts, kind, theta, config)

    if kind is Submodel.GEOM_ONLY:
        # exact MLE: mean of non-zero counts minus one, stored in the NB
        # parametrisation m = d - 1
        mu_hat = float(np.dot(w, nz)) / float(w.sum()) - 1.0
        theta = ZinbgtParams(p0, 1.0 - p0, 0.0, mu_hat, 1.0 + mu_hat, 0.0)
        return _direct_result(counts, kind, theta, config)

    if kind is Submodel.NB_ONLY:
        start = _moment_start(nz, w, np.ones_like(nz), config)
        (m, d), ok = _optimize_nb(nz, w, start, config)
        theta = ZinbgtParams(p0, 1.0 - p0, 0.0, m, d, 0.0)
        res = _direct_result(counts, kind, theta, config)
        if not ok:
            res.flags = res.flags + ("nb-optim-fallback",)
        if m <= config.m_min * (1 + 1e-9):
            res.flags = res.flags + ("m-at-bound",)
        return res

    if kind in (Submodel.FULL_NB_GEOM, Submodel.POISSON_GEOM):
        try:
            return _run_em(counts, kind, config, rng=rng)
        except FitFailure as exc:
            return _sentinel_result(counts, kind, f"fit-failure: {exc}")

    raise ValueError(f"submodel {kind} is not fitted directly")


def fit_gene(counts: GeneCounts, config: FitConfig | None = None,
             seed=None) -> FitResult:
    """Fit all applicable submodels and return the minimum-BIC result.

    Trivial genes short-circuit: all-zero genes get theta=(1,0,0,0,1,0);
    zero/one genes get the constant-one direct MLE with no BIC search.
    """
    config = config or FitConfig()
    trivial = classify_trivial(counts)
    n = counts.n_cells

    if trivial is Triviality.ALL_ZERO:
        theta = ZinbgtParams(1.0, 0.0, 0.0, 0.0, 1.0, 0.0)
        return FitResult(theta=theta, submodel=Submodel.ALL_ZERO,
                         loglik=0.0, bic=0.0, n_iter=0, converged=True)

    if trivial is Triviality.ZERO_ONE_ONLY:
        p0 = counts.zero_fraction
        theta = ZinbgtParams(p0, 1.0 - p0, 0.0, 0.0, 1.0, 0.0)
        ll = loglik(counts, theta)
        return FitResult(
            theta=theta, submodel=Submodel.CONSTANT_ONE_ONLY, loglik=ll,
            bic=_bic(ll, Submodel.CONSTANT_ONE_ONLY.n_free_params, n),
            n_iter=0, converged=True,
        )

    ss = np.random.SeedSequence(
        seed if seed is not None else config.seed
    ) if not isinstance(seed, np.random.SeedSequence) else seed
    children = ss.spawn(len(FITTED_SUBMODELS))

    results: dict[Submodel, FitResult] = {}
    for kind, child in zip(FITTED_SUBMODELS, children):
        rng = np.random.default_rng(child) if config.init_strategy == "random" else None
        results[kind] = fit_submodel(counts, kind, config, rng=rng)

    bic_map = {k: r.bic for k, r in results.items()}
    best_bic = min(bic_map.values())
    candidates = [k for k, b in bic_map.items() if b <= best_bic + BIC_TIE_TOL]
    chosen = min(candidates, key=lambda k: (k.n_free_params, k.order_index))
    best = replace(results[chosen], per_submodel_bic=bic_map)
    return best


def gene_seed_sequence(global_seed: int, gene_index: int, stream: int = 0):
    """Per-gene seed stream, independent of processing order and worker count."""
    return np.random.SeedSequence((global_seed, gene_index, stream))


def fit_genes(genes: list[GeneCounts], config: FitConfig | None = None,
              n_jobs: int = 1, global_seed: int | None = None) -> list[FitResult]:
    """Fit every gene, optionally in parallel; output order matches input."""
    config = config or FitConfig()
    base = config.seed if global_seed is None else global_seed

    def one(i, g):
        return fit_gene(g, config, seed=gene_seed_sequence(base, i, 0))

    if n_jobs == 1:
        return [one(i, g) for i, g in enumerate(genes)]
    return Parallel(n_jobs=n_jobs, batch_size="auto")(
        delayed(one)(i, g) for i, g in enumerate(genes)
    )
