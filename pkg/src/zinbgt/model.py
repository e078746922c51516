"""Mixture model core: parameter space, submodel taxonomy, mass functions.

The model is a three-component mixture over non-negative integers: a constant
zero (weight p0), a hurdle negative binomial parametrised by the mean m and
dispersion d of its non-hurdle equivalent (weight p1), and a hurdle geometric
parametrised by the mean mu_g of its non-hurdle equivalent (weight p2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .ingest import GeneCounts

NEG_INF = float("-inf")

SIMPLEX_TOL = 1e-12
DEFAULT_MASS_TOL = 1e-10
MAX_SUPPORT = 10**6


class Submodel(enum.Enum):
    """Fitted mixture variants, each a restriction of the full parameter space.

    Restrictions: POISSON_GEOM fixes d=1; NB_ONLY and POISSON_ONLY drop the
    geometric component (p2=0, mu_g=0, plus d=1 for the Poisson case);
    GEOM_ONLY keeps only a geometric tail but is stored in the NB
    parametrisation (p2=0, mu_g=0, m=d-1); CONSTANT_ONE_ONLY fixes m=0, d=1.
    ALL_ZERO is the trivial p0=1 case, never BIC-compared.
    """

    FULL_NB_GEOM = "full-nb-geom"
    POISSON_GEOM = "poisson-geom"
    NB_ONLY = "nb-only"
    POISSON_ONLY = "poisson-only"
    GEOM_ONLY = "geom-only"
    CONSTANT_ONE_ONLY = "constant-one-only"
    ALL_ZERO = "all-zero"

    @property
    def n_free_params(self) -> int:
        return _N_FREE[self]

    @property
    def order_index(self) -> int:
        return _ORDER[self]


_N_FREE = {
    Submodel.FULL_NB_GEOM: 5,
    Submodel.POISSON_GEOM: 4,
    Submodel.NB_ONLY: 3,
    Submodel.POISSON_ONLY: 2,
    Submodel.GEOM_ONLY: 2,
    Submodel.CONSTANT_ONE_ONLY: 1,
    Submodel.ALL_ZERO: 0,
}
_ORDER = {kind: i for i, kind in enumerate(Submodel)}

#: Submodels competing in BIC selection for a general gene, in fixed order.
FITTED_SUBMODELS = (
    Submodel.FULL_NB_GEOM,
    Submodel.POISSON_GEOM,
    Submodel.NB_ONLY,
    Submodel.POISSON_ONLY,
    Submodel.GEOM_ONLY,
    Submodel.CONSTANT_ONE_ONLY,
)


@dataclass(frozen=True)
class ZinbgtParams:
    """Parameter vector (p0, p1, p2, m, d, mu_g)."""

    p0: float
    p1: float
    p2: float
    m: float
    d: float
    mu_g: float

    def __post_init__(self):
        vals = (self.p0, self.p1, self.p2, self.m, self.d, self.mu_g)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite parameter in {vals}")
        for p in (self.p0, self.p1, self.p2):
            if not (-SIMPLEX_TOL <= p <= 1.0 + SIMPLEX_TOL):
                raise ValueError(f"mixture weight {p} outside [0,1]")
        if abs(self.p0 + self.p1 + self.p2 - 1.0) > SIMPLEX_TOL:
            raise ValueError("mixture weights must sum to 1")
        if self.m < 0:
            raise ValueError(f"m={self.m} must be >= 0")
        if self.d < 1:
            raise ValueError(f"d={self.d} must be >= 1")
        if self.mu_g < 0:
            raise ValueError(f"mu_g={self.mu_g} must be >= 0")
        if self.m == 0 and self.d != 1:
            raise ValueError("m=0 requires d=1 (constant-one limit)")

    @property
    def nb_shape(self) -> float:
        """NB shape r = m/(d-1); infinite in the Poisson limit."""
        return self.m / (self.d - 1.0) if self.d > 1.0 else math.inf

    @property
    def nb_success(self) -> float:
        return 1.0 / self.d

    @property
    def geom_success(self) -> float:
        return 1.0 / (1.0 + self.mu_g)

    def as_tuple(self):
        return (self.p0, self.p1, self.p2, self.m, self.d, self.mu_g)


@dataclass
class DiscretePmf:
    """Finite representation of a distribution on non-negative integers.

    ``tail_cut`` records the truncation point and the residual mass folded
    into it (None for inherently finite distributions, e.g. empirical ones).
    """

    support: np.ndarray
    mass: np.ndarray
    tail_cut: tuple[int, float] | None = None

    def __post_init__(self):
        self.support = np.asarray(self.support, dtype=np.int64)
        self.mass = np.asarray(self.mass, dtype=np.float64)
        if self.support.shape != self.mass.shape:
            raise ValueError("support/mass shape mismatch")
        if np.any(np.diff(self.support) <= 0):
            raise ValueError("support must be strictly increasing")
        if abs(float(self.mass.sum()) - 1.0) > 1e-12:
            raise ValueError("masses must sum to 1")


def _check_nb_args(m: float, d: float):
    if not (math.isfinite(m) and math.isfinite(d)):
        raise ValueError("non-finite NB parameters")
    if m < 0:
        raise ValueError(f"m={m} must be >= 0")
    if d < 1:
        raise ValueError(f"d={d} must be >= 1")
    if m == 0 and d != 1:
        raise ValueError("m=0 requires d=1")


def pmf_hurdle_nb(x: int, m: float, d: float) -> float:
    """Hurdle negative-binomial mass at x (Poisson when d=1, delta_1 when m=0)."""
    _check_nb_args(m, d)
    if x < 0:
        raise ValueError("x must be a non-negative integer")
    lp = _kernels.hurdle_nb_logpmf(np.array([float(x)]), float(m), float(d))[0]
    return float(np.exp(lp))


def pmf_hurdle_geom(x: int, mu_g: float) -> float:
    """Hurdle geometric mass at x (delta_1 when mu_g=0)."""
    if not math.isfinite(mu_g) or mu_g < 0:
        raise ValueError(f"mu_g={mu_g} must be >= 0")
    if x < 0:
        raise ValueError("x must be a non-negative integer")
    lp = _kernels.hurdle_geom_logpmf(np.array([float(x)]), float(mu_g))[0]
    return float(np.exp(lp))


def pmf_zinbgt(x: int, theta: ZinbgtParams) -> float:
    """Mixture mass at x; equals p0 exactly at x=0."""
    if x < 0:
        raise ValueError("x must be a non-negative integer")
    if x == 0:
        return theta.p0
    return (
        theta.p1 * pmf_hurdle_nb(x, theta.m, theta.d)
        + theta.p2 * pmf_hurdle_geom(x, theta.mu_g)
    )


def nonzero_log_mass(values: np.ndarray, theta: ZinbgtParams) -> np.ndarray:
    """log(p1*f1 + p2*f2) over an array of values (zeros map to -inf)."""
    xs = np.asarray(values, dtype=np.float64)
    return _kernels.mixture_nonzero_logpmf(
        xs, theta.p1, theta.p2, theta.m, theta.d, theta.mu_g
    )


def loglik(counts: GeneCounts, theta: ZinbgtParams) -> float:
    """Observed-data log-likelihood; -inf when any observed value has no mass."""
    total = 0.0
    n0 = counts.n_zero
    if n0 > 0:
        if theta.p0 == 0.0:
            return NEG_INF
        total += n0 * math.log(theta.p0)
    nz = counts.nonzero_values
    if nz.size:
        lm = nonzero_log_mass(nz, theta)
        if np.any(np.isneginf(lm)):
            return NEG_INF
        total += float(np.dot(counts.nonzero_mults.astype(np.float64), lm))
    return total


def truncated_pmf(
    theta: ZinbgtParams,
    mass_tol: float = DEFAULT_MASS_TOL,
    min_support_max: int | None = None,
) -> DiscretePmf:
    """Finite pmf on [0..K]: smallest K with tail mass below mass_tol, the
    residual folded into K.  K is never below ``min_support_max`` and is
    hard-capped at 10^6.
    """
    if not (0.0 < mass_tol <= 1e-6):
        raise ValueError("mass_tol must be in (0, 1e-6]")
    masses = [np.array([theta.p0])]
    cum = theta.p0
    k = 0
    block = 512
    while 1.0 - cum >= mass_tol and k < MAX_SUPPORT:
        xs = np.arange(k + 1, min(k + 1 + block, MAX_SUPPORT + 1), dtype=np.float64)
        blk = np.exp(nonzero_log_mass(xs, theta))
        csum = np.cumsum(blk)
        tail = 1.0 - (cum + csum)
        hit = np.nonzero(tail < mass_tol)[0]
        if hit.size:
            stop = int(hit[0]) + 1
            masses.append(blk[:stop])
            cum += float(csum[stop - 1])
            k += stop
            break
        masses.append(blk)
        cum += float(csum[-1])
        k += blk.size
        block = min(block * 2, 1 << 16)
    mass = np.concatenate(masses)
    if min_support_max is not None and k < min_support_max:
        extra_hi = min(min_support_max, MAX_SUPPORT)
        if extra_hi > k:
            xs = np.arange(k + 1, extra_hi + 1, dtype=np.float64)
            blk = np.exp(nonzero_log_mass(xs, theta))
            mass = np.concatenate([mass, blk])
            cum += float(blk.sum())
            k = extra_hi
    residual = max(0.0, 1.0 - float(mass.sum()))
    mass[-1] += residual
    return DiscretePmf(np.arange(k + 1), mass, tail_cut=(k, residual))


def _sample_hurdle_nb(rng: np.random.Generator, n: int, m: float, d: float):
    """Draw-and-reject-zero on the standard NB / Poisson sampler.

    When the base distribution is nearly all zeros (e.g. m pinned at its
    lower bound with large d), rejection would need ~1/P(X>0) rounds per
    draw, so those cases fall back to inverse-CDF sampling of the hurdle
    pmf instead.
    """
    if m == 0.0:
        return np.ones(n, dtype=np.int64)
    if d <= 1.0 + _kernels.POISSON_D_EPS:
        base_zero = math.exp(-m)
    else:
        r = m / (d - 1.0)
        base_zero = math.exp(-r * math.log(d))
    if base_zero > 0.9:
        return _sample_hurdle_nb_inverse_cdf(rng, n, m, d)
    out = np.empty(n, dtype=np.int64)
    pending = np.arange(n)
    while pending.size:
        if d <= 1.0 + _kernels.POISSON_D_EPS:
            draw = rng.poisson(m, size=pending.size)
        else:
            r = m / (d - 1.0)
            draw = rng.negative_binomial(r, 1.0 / d, size=pending.size)
        out[pending] = draw
        pending = pending[draw == 0]
    return out


def _sample_hurdle_nb_inverse_cdf(rng: np.random.Generator, n: int,
                                  m: float, d: float):
    """Inverse-CDF draws from the hurdle NB pmf (normalized over x >= 1)."""
    k = 64
    while True:
        xs = np.arange(1, k + 1, dtype=np.float64)
        mass = np.exp(_kernels.hurdle_nb_logpmf(xs, float(m), float(d)))
        cum = np.cumsum(mass)
        if 1.0 - cum[-1] < 1e-12 or k >= MAX_SUPPORT:
            break
        k = min(k * 4, MAX_SUPPORT)
    u = rng.random(n) * cum[-1]
    idx = np.minimum(np.searchsorted(cum, u, side="right"), cum.size - 1)
    return (idx + 1).astype(np.int64)


def sample(theta: ZinbgtParams, n: int, seed) -> np.ndarray:
    """n independent mixture draws; deterministic given the seed.

    ``seed`` may be an int, a SeedSequence, or a Generator.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    u = rng.random(n)
    comp = np.where(u < theta.p0, 0, np.where(u < theta.p0 + theta.p1, 1, 2))
    out = np.zeros(n, dtype=np.int64)
    idx1 = np.nonzero(comp == 1)[0]
    if idx1.size:
        out[idx1] = _sample_hurdle_nb(rng, idx1.size, theta.m, theta.d)
    idx2 = np.nonzero(comp == 2)[0]
    if idx2.size:
        # hurdle geometric == standard geometric on {1,2,...} with
        # success probability 1/(1+mu_g)
        out[idx2] = rng.geometric(theta.geom_success, size=idx2.size)
    return out
