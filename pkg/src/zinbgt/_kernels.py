"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba JIT path is used by default.  Setting the environment variable
``ZINBGT_NO_NUMBA=1`` (before import) selects the pure-numpy implementations,
which compute the same quantities with vectorised scipy/numpy calls.  The two
paths agree to floating-point round-off; ``benchmarks/bench_kernels.py``
compares their speed.
"""

import math
import os

import numpy as np
from scipy.special import gammaln

_DISABLE = os.environ.get("ZINBGT_NO_NUMBA", "").lower() in ("1", "true", "yes")

if not _DISABLE:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        _DISABLE = True

USE_NUMBA = not _DISABLE

# d this close to 1 is evaluated on the Poisson branch: the NB branch's
# (d-1) factors lose all precision in this neighbourhood.
POISSON_D_EPS = 1e-8


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numba path: scalar loops

def _hurdle_nb_logpmf_loop(xs, m, d):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        x = xs[i]
        if x < 1.0:
            out[i] = -np.inf
        elif m == 0.0:
            out[i] = 0.0 if x == 1.0 else -np.inf
        elif d <= 1.0 + POISSON_D_EPS:
            out[i] = (
                -m + x * math.log(m) - math.lgamma(x + 1.0)
                - math.log1p(-math.exp(-m))
            )
        else:
            r = m / (d - 1.0)
            a = r * math.log(d)
            if a < 1e-3:
                lognorm = math.log(math.expm1(a))
            else:
                lognorm = a + math.log1p(-math.exp(-a))
            out[i] = (
                math.lgamma(x + r) - math.lgamma(x + 1.0) - math.lgamma(r)
                + x * (math.log(d - 1.0) - math.log(d)) - lognorm
            )
    return out


def _hurdle_geom_logpmf_loop(xs, mu_g):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        x = xs[i]
        if x < 1.0:
            out[i] = -np.inf
        elif mu_g == 0.0:
            out[i] = 0.0 if x == 1.0 else -np.inf
        else:
            out[i] = (x - 1.0) * math.log(mu_g) - x * math.log1p(mu_g)
    return out


def _make_nb_weighted_loglik(nb_logpmf):
    def nb_weighted_loglik(xs, ws, m, d):
        lp = nb_logpmf(xs, m, d)
        total = 0.0
        for i in range(xs.shape[0]):
            if ws[i] > 0.0:
                total += ws[i] * lp[i]
        return total
    return nb_weighted_loglik


def _make_geom_weighted_loglik(geom_logpmf):
    def geom_weighted_loglik(xs, ws, mu_g):
        lp = geom_logpmf(xs, mu_g)
        total = 0.0
        for i in range(xs.shape[0]):
            if ws[i] > 0.0:
                total += ws[i] * lp[i]
        return total
    return geom_weighted_loglik


def _make_mixture_nonzero_logpmf(nb_logpmf, geom_logpmf):
    def mixture_nonzero_logpmf(xs, p1, p2, m, d, mu_g):
        l1 = nb_logpmf(xs, m, d)
        l2 = geom_logpmf(xs, mu_g)
        out = np.empty(xs.shape[0])
        lp1 = math.log(p1) if p1 > 0.0 else -np.inf
        lp2 = math.log(p2) if p2 > 0.0 else -np.inf
        for i in range(xs.shape[0]):
            a = lp1 + l1[i]
            b = lp2 + l2[i]
            if a == -np.inf and b == -np.inf:
                out[i] = -np.inf
            elif a >= b:
                out[i] = a + math.log1p(math.exp(b - a))
            else:
                out[i] = b + math.log1p(math.exp(a - b))
        return out
    return mixture_nonzero_logpmf


def _make_mixture_gamma1(nb_logpmf, geom_logpmf):
    def mixture_gamma1(xs, p1, p2, m, d, mu_g):
        """Posterior weight of the NB component per value; NaN marks values
        with zero mass under both components."""
        l1 = nb_logpmf(xs, m, d)
        l2 = geom_logpmf(xs, mu_g)
        lp1 = math.log(p1) if p1 > 0.0 else -np.inf
        lp2 = math.log(p2) if p2 > 0.0 else -np.inf
        out = np.empty(xs.shape[0])
        for i in range(xs.shape[0]):
            a = lp1 + l1[i]
            b = lp2 + l2[i]
            if a == -np.inf and b == -np.inf:
                out[i] = np.nan
            elif a == -np.inf:
                out[i] = 0.0
            elif b == -np.inf:
                out[i] = 1.0
            else:
                out[i] = 1.0 / (1.0 + math.exp(b - a))
        return out
    return mixture_gamma1


def _nb_objective_loop(xs, ws, m, d):
    """Weighted hurdle-NB log-likelihood minus the sum of
    ws * lgamma(x + 1), a term that does not depend on (m, d).

    Dropping that term and hoisting every per-parameter scalar out of the
    data loop makes this the cheap objective for the simplex search; the
    argmax is unchanged.  Requires m > 0 and all weighted values >= 1."""
    if d <= 1.0 + POISSON_D_EPS:
        lm = math.log(m)
        c = -m - math.log1p(-math.exp(-m))
        total = 0.0
        for i in range(xs.shape[0]):
            if ws[i] > 0.0:
                if xs[i] < 1.0:
                    return -np.inf
                total += ws[i] * (c + xs[i] * lm)
        return total
    r = m / (d - 1.0)
    a = r * math.log(d)
    if a < 1e-3:
        lognorm = math.log(math.expm1(a))
    else:
        lognorm = a + math.log1p(-math.exp(-a))
    c = -math.lgamma(r) - lognorm
    lx = math.log(d - 1.0) - math.log(d)
    total = 0.0
    for i in range(xs.shape[0]):
        if ws[i] > 0.0:
            if xs[i] < 1.0:
                return -np.inf
            total += ws[i] * (math.lgamma(xs[i] + r) + c + xs[i] * lx)
    return total


def _make_optimize_nb(nb_objective):
    def optimize_nb(xs, ws, z0, z1, m_min, d_max, step, xatol, fatol, maxfev):
        """Nelder-Mead minimisation of the negative weighted hurdle-NB
        log-likelihood over (log m, log(d-1)).  Returns (z0, z1, fmin);
        fmin is shifted by the parameter-independent sum of
        ws * lgamma(x + 1), which the objective omits.

        ``step`` sets the relative initial-simplex size; warm restarts close
        to the optimum pass a small step so the simplex need not re-contract
        from scratch."""
        sim = np.empty((3, 2))
        fs = np.empty(3)
        sim[0, 0] = z0
        sim[0, 1] = z1
        for k in range(2):
            sim[k + 1, 0] = z0
            sim[k + 1, 1] = z1
            y = sim[k + 1, k]
            sim[k + 1, k] = y * (1.0 + step) if y != 0.0 else step / 200.0

        def neg(a, b):
            m = math.exp(a) if a < 60.0 else math.exp(60.0)
            if m < m_min:
                m = m_min
            d = 1.0 + (math.exp(b) if b < 60.0 else math.exp(60.0))
            if d > d_max:
                d = d_max
            v = -nb_objective(xs, ws, m, d)
            return v if v == v else np.inf

        for i in range(3):
            fs[i] = neg(sim[i, 0], sim[i, 1])
        nfev = 3
        while nfev < maxfev:
            # order vertices best to worst (3 elements, insertion style)
            for a in range(2):
                for b in range(a + 1, 3):
                    if fs[b] < fs[a]:
                        tmpf = fs[a]; fs[a] = fs[b]; fs[b] = tmpf
                        for k in range(2):
                            tmp = sim[a, k]; sim[a, k] = sim[b, k]; sim[b, k] = tmp
            dx = 0.0
            df = 0.0
            for j in range(1, 3):
                df = max(df, abs(fs[j] - fs[0]))
                for k in range(2):
                    dx = max(dx, abs(sim[j, k] - sim[0, k]))
            if dx <= xatol and df <= fatol:
                break
            c0 = 0.5 * (sim[0, 0] + sim[1, 0])
            c1 = 0.5 * (sim[0, 1] + sim[1, 1])
            xr0 = 2.0 * c0 - sim[2, 0]
            xr1 = 2.0 * c1 - sim[2, 1]
            fr = neg(xr0, xr1)
            nfev += 1
            shrink = False
            if fr < fs[0]:
                xe0 = 3.0 * c0 - 2.0 * sim[2, 0]
                xe1 = 3.0 * c1 - 2.0 * sim[2, 1]
                fe = neg(xe0, xe1)
                nfev += 1
                if fe < fr:
                    sim[2, 0] = xe0; sim[2, 1] = xe1; fs[2] = fe
                else:
                    sim[2, 0] = xr0; sim[2, 1] = xr1; fs[2] = fr
            elif fr < fs[1]:
                sim[2, 0] = xr0; sim[2, 1] = xr1; fs[2] = fr
            elif fr < fs[2]:
                xc0 = 1.5 * c0 - 0.5 * sim[2, 0]
                xc1 = 1.5 * c1 - 0.5 * sim[2, 1]
                fc = neg(xc0, xc1)
                nfev += 1
                if fc <= fr:
                    sim[2, 0] = xc0; sim[2, 1] = xc1; fs[2] = fc
                else:
                    shrink = True
            else:
                xc0 = 0.5 * c0 + 0.5 * sim[2, 0]
                xc1 = 0.5 * c1 + 0.5 * sim[2, 1]
                fc = neg(xc0, xc1)
                nfev += 1
                if fc < fs[2]:
                    sim[2, 0] = xc0; sim[2, 1] = xc1; fs[2] = fc
                else:
                    shrink = True
            if shrink:
                for j in range(1, 3):
                    sim[j, 0] = sim[0, 0] + 0.5 * (sim[j, 0] - sim[0, 0])
                    sim[j, 1] = sim[0, 1] + 0.5 * (sim[j, 1] - sim[0, 1])
                    fs[j] = neg(sim[j, 0], sim[j, 1])
                    nfev += 1
        best = 0
        for j in range(1, 3):
            if fs[j] < fs[best]:
                best = j
        return sim[best, 0], sim[best, 1], fs[best]
    return optimize_nb


# ---------------------------------------------------------------------------
# numpy path: vectorised

def _hurdle_nb_logpmf_np(xs, m, d):
    xs = np.asarray(xs, dtype=np.float64)
    out = np.full(xs.shape, -np.inf)
    pos = xs >= 1.0
    if m == 0.0:
        out[xs == 1.0] = 0.0
        return out
    if d <= 1.0 + POISSON_D_EPS:
        x = xs[pos]
        out[pos] = -m + x * np.log(m) - gammaln(x + 1.0) - np.log1p(-np.exp(-m))
        return out
    r = m / (d - 1.0)
    a = r * np.log(d)
    lognorm = np.log(np.expm1(a)) if a < 1e-3 else a + np.log1p(-np.exp(-a))
    x = xs[pos]
    out[pos] = (
        gammaln(x + r) - gammaln(x + 1.0) - gammaln(r)
        + x * (np.log(d - 1.0) - np.log(d)) - lognorm
    )
    return out


def _hurdle_geom_logpmf_np(xs, mu_g):
    xs = np.asarray(xs, dtype=np.float64)
    out = np.full(xs.shape, -np.inf)
    if mu_g == 0.0:
        out[xs == 1.0] = 0.0
        return out
    pos = xs >= 1.0
    x = xs[pos]
    out[pos] = (x - 1.0) * np.log(mu_g) - x * np.log1p(mu_g)
    return out


def _nb_objective_np(xs, ws, m, d):
    """Vectorised twin of the hoisted simplex objective: weighted hurdle-NB
    log-likelihood without the (m, d)-independent lgamma(x + 1) term."""
    active = ws > 0.0
    x = xs[active]
    w = ws[active]
    if np.any(x < 1.0):
        return -np.inf
    if d <= 1.0 + POISSON_D_EPS:
        lp = x * np.log(m) - m - np.log1p(-np.exp(-m))
    else:
        r = m / (d - 1.0)
        a = r * np.log(d)
        lognorm = np.log(np.expm1(a)) if a < 1e-3 else a + np.log1p(-np.exp(-a))
        lp = (gammaln(x + r) - gammaln(r)
              + x * (np.log(d - 1.0) - np.log(d)) - lognorm)
    return float(np.dot(w, lp))


def _nb_weighted_loglik_np(xs, ws, m, d):
    lp = _hurdle_nb_logpmf_np(xs, m, d)
    active = ws > 0.0
    return float(np.sum(ws[active] * lp[active]))


def _geom_weighted_loglik_np(xs, ws, mu_g):
    lp = _hurdle_geom_logpmf_np(xs, mu_g)
    active = ws > 0.0
    return float(np.sum(ws[active] * lp[active]))


def _mixture_nonzero_logpmf_np(xs, p1, p2, m, d, mu_g):
    l1 = _hurdle_nb_logpmf_np(xs, m, d)
    l2 = _hurdle_geom_logpmf_np(xs, mu_g)
    a = (np.log(p1) if p1 > 0.0 else -np.inf) + l1
    b = (np.log(p2) if p2 > 0.0 else -np.inf) + l2
    with np.errstate(invalid="ignore"):
        out = np.logaddexp(a, b)
    both_dead = np.isneginf(a) & np.isneginf(b)
    out[both_dead] = -np.inf
    return out


def _mixture_gamma1_np(xs, p1, p2, m, d, mu_g):
    l1 = _hurdle_nb_logpmf_np(xs, m, d)
    l2 = _hurdle_geom_logpmf_np(xs, mu_g)
    a = (np.log(p1) if p1 > 0.0 else -np.inf) + l1
    b = (np.log(p2) if p2 > 0.0 else -np.inf) + l2
    out = np.empty(xs.shape)
    dead_a, dead_b = np.isneginf(a), np.isneginf(b)
    live = ~dead_a & ~dead_b
    out[dead_a & dead_b] = np.nan
    out[dead_a & ~dead_b] = 0.0
    out[~dead_a & dead_b] = 1.0
    out[live] = 1.0 / (1.0 + np.exp(np.minimum(b[live] - a[live], 700.0)))
    return out


if USE_NUMBA:
    hurdle_nb_logpmf = njit(cache=True)(_hurdle_nb_logpmf_loop)
    hurdle_geom_logpmf = njit(cache=True)(_hurdle_geom_logpmf_loop)
    nb_weighted_loglik = njit(cache=True)(_make_nb_weighted_loglik(hurdle_nb_logpmf))
    geom_weighted_loglik = njit(cache=True)(
        _make_geom_weighted_loglik(hurdle_geom_logpmf))
    mixture_nonzero_logpmf = njit(cache=True)(
        _make_mixture_nonzero_logpmf(hurdle_nb_logpmf, hurdle_geom_logpmf))
    nb_objective = njit(cache=True)(_nb_objective_loop)
    optimize_nb = njit(cache=True)(_make_optimize_nb(nb_objective))
    mixture_gamma1 = njit(cache=True)(
        _make_mixture_gamma1(hurdle_nb_logpmf, hurdle_geom_logpmf))
else:
    hurdle_nb_logpmf = _hurdle_nb_logpmf_np
    hurdle_geom_logpmf = _hurdle_geom_logpmf_np
    nb_weighted_loglik = _nb_weighted_loglik_np
    geom_weighted_loglik = _geom_weighted_loglik_np
    mixture_nonzero_logpmf = _mixture_nonzero_logpmf_np
    nb_objective = _nb_objective_np
    # same algorithms, interpreted, over the vectorised primitives
    optimize_nb = _make_optimize_nb(_nb_objective_np)
    mixture_gamma1 = _mixture_gamma1_np


def warmup():
    """Trigger JIT compilation so timings exclude compile overhead."""
    xs = np.array([1.0, 2.0, 3.0])
    ws = np.ones(3)
    hurdle_nb_logpmf(xs, 2.0, 3.0)
    hurdle_nb_logpmf(xs, 2.0, 1.0)
    hurdle_geom_logpmf(xs, 1.5)
    nb_weighted_loglik(xs, ws, 2.0, 3.0)
    nb_objective(xs, ws, 2.0, 3.0)
    nb_objective(xs, ws, 2.0, 1.0)
    geom_weighted_loglik(xs, ws, 1.5)
    mixture_nonzero_logpmf(xs, 0.4, 0.3, 2.0, 3.0, 1.5)
    optimize_nb(xs, ws, 0.5, 0.5, 1e-8, 1e6, 0.05, 1e-8, 1e-10, 50)
    mixture_gamma1(xs, 0.4, 0.3, 2.0, 3.0, 1.5)
