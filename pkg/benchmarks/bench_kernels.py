#!/usr/bin/env python3
"""Time the compiled inner-loop kernels against their interpreted originals.

Both builds of every kernel live in greedycd._kernels (the ``py_`` names are
the plain-Python originals; the public names are the numba builds unless
GREEDYCD_NUMBA=0), so one process can time the two paths on identical
workloads.  Each workload regenerates its state from the same seed before
every timed pass and reports the best wall time of --repeats passes.

With --end-to-end the script also times a full solver invocation in two
subprocesses, one per GREEDYCD_NUMBA setting.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from greedycd import _kernels as kernels


def timed(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def heap_workload(impl_build, impl_update, seed, n=5000, ops=20000):
    rng = np.random.default_rng(seed)
    keys = rng.standard_normal(n)
    targets = rng.integers(0, n, size=ops)
    new_keys = rng.standard_normal(ops)

    def go():
        k = keys.copy()
        order = np.arange(n, dtype=np.int64)
        pos = np.arange(n, dtype=np.int64)
        impl_build(k, order, pos)
        for t in range(ops):
            impl_update(k, order, pos, targets[t], new_keys[t])

    return go


def col_axpy_workload(impl, seed, m=200_000, nnz=5000, calls=200):
    rng = np.random.default_rng(seed)
    rows = rng.choice(m, size=nnz, replace=False).astype(np.int64)
    vals = rng.standard_normal(nnz)
    deltas = rng.standard_normal(calls)

    def go():
        y = np.zeros(m)
        for t in range(calls):
            impl(0, nnz, rows, vals, deltas[t], y)

    return go


def scatter_workload(impl, seed, nrows=3000, ncols=3000, row_nnz=40,
                     batch=60, calls=200):
    rng = np.random.default_rng(seed)
    row_cols = np.empty(nrows * row_nnz, dtype=np.int64)
    for r in range(nrows):
        row_cols[r * row_nnz:(r + 1) * row_nnz] = rng.choice(
            ncols, size=row_nnz, replace=False)
    row_indptr = np.arange(nrows + 1, dtype=np.int64) * row_nnz
    row_vals = rng.standard_normal(nrows * row_nnz)
    batches = rng.integers(0, nrows, size=(calls, batch)).astype(np.int64)
    dg = rng.standard_normal(batch)

    def go():
        target = np.zeros(ncols)
        stamp = np.zeros(ncols, dtype=np.int64)
        touched = np.empty(ncols, dtype=np.int64)
        for t in range(calls):
            impl(batches[t], dg, row_indptr, row_cols, row_vals, target,
                 stamp, t + 1, touched)

    return go


def graph_workload(impl, seed, n=100_000, deg=8, ops=20_000):
    rng = np.random.default_rng(seed)
    # a ring with extra chords gives every node exactly ``deg`` neighbours
    half = deg // 2
    nbr = np.empty(n * deg, dtype=np.int64)
    rev = np.empty(n * deg, dtype=np.int64)
    for off in range(half):
        hop = off + 1
        for i in range(n):
            nbr[i * deg + 2 * off] = (i + hop) % n
            nbr[i * deg + 2 * off + 1] = (i - hop) % n
            rev[i * deg + 2 * off] = ((i + hop) % n) * deg + 2 * off + 1
            rev[i * deg + 2 * off + 1] = ((i - hop) % n) * deg + 2 * off
    indptr = np.arange(n + 1, dtype=np.int64) * deg
    w = np.abs(rng.standard_normal(n * deg)) + 0.1
    w = np.minimum(w, w[rev])  # symmetric edge weights
    q = rng.uniform(0.1, 1.0, size=n)
    b = rng.standard_normal(n)
    targets = rng.integers(0, n, size=ops)
    moves = rng.standard_normal(ops)

    def go():
        x = np.zeros(n)
        part = w * 0.0
        grad = q * x - b
        for t in range(ops):
            impl(targets[t], moves[t], x, indptr, nbr, w, rev, part, grad,
                 q, b)

    return go


def build_table(seed, repeats):
    rows = []
    specs = [
        ("heap build+update",
         heap_workload(kernels.py_heap_build, kernels.py_heap_update, seed),
         heap_workload(kernels.heap_build, kernels.heap_update, seed)),
        ("column axpy",
         col_axpy_workload(kernels.py_col_axpy, seed),
         col_axpy_workload(kernels.col_axpy, seed)),
        ("row-delta scatter",
         scatter_workload(kernels.py_scatter_row_deltas, seed),
         scatter_workload(kernels.scatter_row_deltas, seed)),
        ("graph coordinate move",
         graph_workload(kernels.py_graph_coord_update, seed),
         graph_workload(kernels.graph_coord_update, seed)),
    ]
    for name, py_go, jit_go in specs:
        if kernels.NUMBA_ENABLED:
            jit_go()  # warm-up triggers compilation outside the timing
        t_py = timed(py_go, repeats)
        t_jit = timed(jit_go, repeats) if kernels.NUMBA_ENABLED else None
        rows.append((name, t_py, t_jit))
    return rows


def end_to_end(args):
    cmd = [sys.executable, "-m", "greedycd.cli", "run", "--problem",
           "sparse_ls", "--m", str(args.m), "--n", str(args.n), "--rule",
           "gsl", "--iters", str(args.iters), "--tol", "0"]
    print(f"\nend-to-end: {' '.join(cmd[1:])}")
    for flag in ("1", "0"):
        env = dict(os.environ, GREEDYCD_NUMBA=flag)
        subprocess.run(cmd, env=env, check=True, capture_output=True)  # warm
        t0 = time.perf_counter()
        subprocess.run(cmd, env=env, check=True, capture_output=True)
        label = "compiled kernels" if flag == "1" else "interpreted kernels"
        print(f"  GREEDYCD_NUMBA={flag} ({label}): "
              f"{time.perf_counter() - t0:.2f} s")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--end-to-end", action="store_true",
                        help="also time a full solver run per flag setting")
    parser.add_argument("--m", type=int, default=2000)
    parser.add_argument("--n", type=int, default=2000)
    parser.add_argument("--iters", type=int, default=4000)
    args = parser.parse_args(argv)

    if not kernels.NUMBA_ENABLED:
        print("note: numba is disabled (GREEDYCD_NUMBA=0 or not importable); "
              "timing the interpreted path only")

    rows = build_table(args.seed, args.repeats)
    width = max(len(name) for name, *_ in rows)
    print(f"{'kernel':<{width}}  {'python':>10}  {'numba':>10}  {'speedup':>8}")
    for name, t_py, t_jit in rows:
        if t_jit is None:
            print(f"{name:<{width}}  {t_py:>9.4f}s  {'-':>10}  {'-':>8}")
        else:
            print(f"{name:<{width}}  {t_py:>9.4f}s  {t_jit:>9.4f}s  "
                  f"{t_py / t_jit:>7.1f}x")

    if args.end_to_end:
        end_to_end(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
