"""Time the compiled kernels against the pure-Python fallback.

Run with ``python3 benchmarks/bench_kernels.py``. Both backends are loaded
side by side, and each timing is the best of ``--repeat`` runs. Outputs are
checked for agreement before the timings are reported.
"""

import argparse
import importlib
import time

import numpy as np

from moranlif import lattice_rook, row_standardize, standardize
from moranlif.influence import QUAD_TOL, influence_coefficients, lag_sums
from moranlif.moran import moran_i


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def lisa_case(side, n_perm):
    w = row_standardize(lattice_rook(side, side))
    z = np.ascontiguousarray(standardize(np.random.default_rng(1).standard_normal(side * side)).standardized)
    lag = w.lag(z)
    center = -z * z * np.bincount(np.repeat(np.arange(w.n), w.cardinalities), weights=w.data) / (w.n - 1)
    thr = np.abs(z * lag - center)
    return lambda k: k.lisa_exceed_counts(z, w.indptr, w.indices, w.data, center, thr, n_perm, 7)


def quad_case(side):
    w = row_standardize(lattice_rook(side, side))
    z = standardize(np.random.default_rng(2).standard_normal(side * side))
    num, den = influence_coefficients(w.n, lag_sums(z, w), moran_i(z, w))
    return lambda k: k.rational_abs_integrals(num, den, -2.0, 2.0, QUAD_TOL)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    py = importlib.import_module("moranlif._kernels_py")
    try:
        cy = importlib.import_module("moranlif._kernels")
    except ImportError:
        raise SystemExit("compiled extension not built; reinstall with Cython available")

    cases = [
        ("lisa 10x10, 999 perms", lisa_case(10, 999)),
        ("lisa 30x30, 999 perms", lisa_case(30, 999)),
        ("lif quadrature 10x10", quad_case(10)),
        ("lif quadrature 50x50", quad_case(50)),
    ]
    print(f"{'kernel':<26}{'python (s)':>12}{'cython (s)':>12}{'speedup':>10}")
    for name, run in cases:
        t_py, out_py = best_of(lambda: run(py), args.repeat)
        t_cy, out_cy = best_of(lambda: run(cy), args.repeat)
        if out_py.dtype.kind == "i":
            assert np.array_equal(out_py, out_cy), name
        else:
            np.testing.assert_allclose(out_py, out_cy, rtol=1e-8, atol=1e-9)
        print(f"{name:<26}{t_py:>12.4f}{t_cy:>12.4f}{t_py / t_cy:>9.1f}x")


if __name__ == "__main__":
    main()
