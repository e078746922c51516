"""Independent reference implementations used only by tests.

These deliberately avoid the library's own algorithms: the transport oracle
solves the optimal-transport linear program directly, and the root oracle
uses plain bisection.
"""

import math

import numpy as np
from scipy.optimize import linprog


def transport_lp_oracle(support_a, mass_a, support_b, mass_b,
                        alpha=1.0, transform="identity") -> float:
    """W_alpha via the explicit transport linear program.

    Feasible for small supports only; cost matrix |t(x) - t(y)|^alpha with
    t the identity or log1p.
    """
    xa = np.asarray(support_a, dtype=np.float64)
    xb = np.asarray(support_b, dtype=np.float64)
    if transform == "log1p":
        xa, xb = np.log1p(xa), np.log1p(xb)
    cost = np.abs(xa[:, None] - xb[None, :]) ** alpha
    na, nb = xa.size, xb.size
    # row-sum and column-sum marginal constraints
    a_eq = np.zeros((na + nb, na * nb))
    for i in range(na):
        a_eq[i, i * nb:(i + 1) * nb] = 1.0
    for j in range(nb):
        a_eq[na + j, j::nb] = 1.0
    b_eq = np.concatenate([mass_a, mass_b])
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq,
                  bounds=(0, None), method="highs",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    assert res.success, res.message
    return float(res.fun) ** (1.0 / alpha)


def hurdle_poisson_root_oracle(x_tilde: float, tol: float = 1e-10) -> float:
    """Bisection root of m / (1 - exp(-m)) = x_tilde on (0, 60)."""

    def g(m):
        return m / -math.expm1(-m) - x_tilde

    lo, hi = 1e-12, 60.0
    assert g(lo) < 0 < g(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def random_pmf(rng, max_support: int = 20):
    """Random sparse pmf on a subset of 0..5*max_support."""
    size = rng.integers(1, max_support + 1)
    support = np.sort(rng.choice(np.arange(5 * max_support), size=size,
                                 replace=False))
    mass = rng.dirichlet(np.ones(size))
    return support.astype(np.int64), mass
