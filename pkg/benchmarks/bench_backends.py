#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each hot path on both backends in one process: the compiled
dispatchers are called directly for the numba timing, their .py_func /
vectorized twins for the numpy timing. The same comparison across
processes is available via NHGEO_NUMBA=0.

Usage: python benchmarks/bench_backends.py [--repeat N]
"""

import argparse
import time

import numpy as np

from nhgeo import NUMBA_ENABLED, PTChainModel, build_gaussian, scan_bands
from nhgeo import _schur
from nhgeo.response import _series_kernel, _series_numpy
from nhgeo.special import ei_grid


def timeit(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_eig(repeat):
    rng = np.random.default_rng(0)
    mats = [rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
            for _ in range(400)]
    mats = [np.ascontiguousarray(m) for m in mats]

    def run(hess, qr, vecs):
        for A in mats:
            T, Q = hess(A)
            qr(T, Q, 40)
            vecs(T, Q)

    compiled = lambda: run(_schur.hessenberg_reduce, _schur.qr_iterate,
                           _schur.triangular_eigvecs)
    interp = lambda: run(_schur.hessenberg_reduce.py_func,
                         _schur.qr_iterate.py_func,
                         _schur.triangular_eigvecs.py_func)
    compiled()  # warm the jit cache
    return timeit(compiled, repeat), timeit(interp, max(1, repeat // 3))


def bench_response(repeat):
    scan = scan_bands(PTChainModel(m=0.8, L=512))
    pk = build_gaussian(scan, 0, 1.1 * np.pi, 32.0, 256.0)
    ts = np.arange(0.0, 300.0, 0.05)
    eps = np.ascontiguousarray(scan.energies)
    right = np.ascontiguousarray(scan.right)
    c0 = np.ascontiguousarray(pk.orbital_coefficients())
    V = np.stack([scan.model.velocity(k) for k in scan.k_grid])
    btil = np.ascontiguousarray(
        np.einsum("jab,ja->jb", scan.left.conj(), np.einsum("jab,jb->ja", V, c0)))
    args = (ts, 0.0, eps, right, c0, btil, 0, 512.0)
    _series_kernel(*args)  # warm
    return (timeit(lambda: _series_kernel(*args), repeat),
            timeit(lambda: _series_numpy(*args), repeat))


def bench_ei(repeat):
    x = np.linspace(0.01, 120.0, 200_000)
    xs = x[::100].copy()  # 2k points for the interpreted path
    ei_grid(x)  # warm
    return (timeit(lambda: ei_grid(x), repeat),
            timeit(lambda: ei_grid.py_func(xs), 1))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if not NUMBA_ENABLED:
        print("numba backend is disabled (NHGEO_NUMBA=0); only the fallback "
              "path can be timed in this process.")
        return
    rows = []
    jit, py = bench_eig(args.repeat)
    rows.append(("eig pipeline, 400 8x8 matrices", jit, py, 1.0))
    jit, py = bench_response(args.repeat)
    rows.append(("response series, 6000 t x 512 k", jit, py, 1.0))
    jit, py = bench_ei(args.repeat)
    rows.append(("Ei(x), 200k points (fallback: 2k)", jit, py, 0.01))
    print(f"{'kernel':40s} {'numba':>10s} {'numpy':>10s} {'speedup':>9s}")
    for name, jit, py, scale in rows:
        print(f"{name:40s} {jit:9.4f}s {py / scale:9.4f}s "
              f"{(py / scale) / jit:8.1f}x")


if __name__ == "__main__":
    main()
