"""Benchmark the numba kernel path against the pure-numpy fallback.

Both implementations live in ``zinbgt._kernels``; this script times the
jitted functions next to their vectorised numpy twins on a range of
unique-value array sizes and reports the speedup.

Run:  python3 benchmarks/bench_kernels.py
"""

import timeit

import numpy as np

from zinbgt import _kernels


def _bench(fn, args, repeat=5, number=200):
    return min(timeit.repeat(lambda: fn(*args), repeat=repeat, number=number)) / number


def main():
    if not _kernels.USE_NUMBA:
        raise SystemExit(
            "numba backend disabled (ZINBGT_NO_NUMBA set or numba missing); "
            "nothing to compare"
        )
    _kernels.warmup()

    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'n':>6s} {'numba':>10s} {'numpy':>10s} {'speedup':>8s}")
    for n in (50, 200, 1000, 5000):
        xs = np.sort(rng.integers(1, 500, size=n)).astype(np.float64)
        ws = rng.random(n) * 10.0

        pairs = [
            ("hurdle_nb_logpmf", _kernels.hurdle_nb_logpmf,
             _kernels._hurdle_nb_logpmf_np, (xs, 5.0, 3.0)),
            ("hurdle_geom_logpmf", _kernels.hurdle_geom_logpmf,
             _kernels._hurdle_geom_logpmf_np, (xs, 8.0)),
            ("nb_weighted_loglik", _kernels.nb_weighted_loglik,
             _kernels._nb_weighted_loglik_np, (xs, ws, 5.0, 3.0)),
            ("mixture_nonzero_logpmf", _kernels.mixture_nonzero_logpmf,
             _kernels._mixture_nonzero_logpmf_np,
             (xs, 0.5, 0.3, 5.0, 3.0, 8.0)),
            ("mixture_gamma1", _kernels.mixture_gamma1,
             _kernels._mixture_gamma1_np,
             (xs, 0.5, 0.3, 5.0, 3.0, 8.0)),
            ("nb_objective", _kernels.nb_objective,
             _kernels._nb_objective_np, (xs, ws, 5.0, 3.0)),
            ("optimize_nb", _kernels.optimize_nb,
             _kernels._make_optimize_nb(_kernels._nb_objective_np),
             (xs, ws, np.log(4.0), np.log(2.0), 1e-8, 1e6,
              0.05, 1e-8, 1e-10, 600)),
        ]
        for name, jitted, plain, args in pairs:
            number = 20 if name == "optimize_nb" else 200
            t_jit = _bench(jitted, args, number=number)
            t_np = _bench(plain, args, number=number)
            print(f"{name:28s} {n:6d} {t_jit*1e6:9.1f}u {t_np*1e6:9.1f}u "
                  f"{t_np/t_jit:7.1f}x")


if __name__ == "__main__":
    main()
