#!/usr/bin/env python3
"""Timing comparison of the compiled kernel core vs the numpy fallback.

The fused posterior kernel dominates acquisition runtime (hundreds of
candidate evaluations x Monte-Carlo paths x nodes per round), so this
times both implementations across representative (n_train, n_query, dim)
shapes and prints the speedup. Run:

    python3 benchmarks/bench_backends.py [--repeats 200]
"""

import argparse
import time

import numpy as np

from excbo import _gpcore_py

try:
    from excbo import _gpcore
except ImportError:
    _gpcore = None

SHAPES = [
    # (n_train, n_query, dim)   typical source
    (20, 1, 3),     # Nelder-Mead polish step, early rounds
    (70, 1, 3),     # Nelder-Mead polish step, late rounds
    (70, 32, 3),    # one candidate x 32 Monte-Carlo paths
    (70, 8192, 3),  # full 256-candidate scan, batched
    (70, 32, 8),    # epidemic-sized decoder inputs
    (400, 64, 5),   # hyperparameter-search-sized fits
]


def _bench(impl, q, x, ls, sv, alpha, kinv, repeats):
    impl.gp_mean_var(q, x, ls, sv, alpha, kinv)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        impl.gp_mean_var(q, x, ls, sv, alpha, kinv)
    return (time.perf_counter() - t0) / repeats


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    if _gpcore is None:
        print("compiled core not built; showing numpy fallback only")
    rng = np.random.default_rng(0)
    header = f"{'shape (n,m,D)':>18} {'python':>12} {'compiled':>12} {'speedup':>9}"
    print(header)
    print("-" * len(header))
    for n, m, d in SHAPES:
        x = np.ascontiguousarray(rng.uniform(-2, 2, (n, d)))
        q = np.ascontiguousarray(rng.uniform(-2, 2, (m, d)))
        ls = np.ascontiguousarray(rng.uniform(0.3, 2.0, d))
        alpha = np.ascontiguousarray(rng.normal(size=n))
        a = rng.normal(size=(n, n))
        kinv = np.ascontiguousarray(a @ a.T / n + np.eye(n))
        repeats = max(3, args.repeats // (1 + m // 64))
        t_py = _bench(_gpcore_py, q, x, ls, 1.0, alpha, kinv, repeats)
        if _gpcore is not None:
            t_c = _bench(_gpcore, q, x, ls, 1.0, alpha, kinv, repeats)
            mp, vp = _gpcore_py.gp_mean_var(q, x, ls, 1.0, alpha, kinv)
            mc, vc = _gpcore.gp_mean_var(q, x, ls, 1.0, alpha, kinv)
            assert np.max(np.abs(mp - mc)) < 1e-10
            assert np.max(np.abs(vp - vc)) < 1e-10
            print(f"{str((n, m, d)):>18} {t_py * 1e6:>10.1f}us "
                  f"{t_c * 1e6:>10.1f}us {t_py / t_c:>8.1f}x")
        else:
            print(f"{str((n, m, d)):>18} {t_py * 1e6:>10.1f}us "
                  f"{'-':>12} {'-':>9}")


if __name__ == "__main__":
    main()
