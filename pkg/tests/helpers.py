"""Shared test utilities: random instance generators and small oracles."""

import numpy as np

from greedycd.linalg import SparseMatrix


def random_sparse(rng, m, n, density=0.3, ensure_nonempty_cols=True):
    """Random sparse matrix plus its dense mirror."""
    dense = rng.standard_normal((m, n))
    mask = rng.random((m, n)) < density
    if ensure_nonempty_cols:
        for j in range(n):
            if not mask[:, j].any():
                mask[rng.integers(m), j] = True
    dense = np.where(mask, dense, 0.0)
    return SparseMatrix.from_dense(dense), dense


def random_spd(rng, n, lam_lo=0.3, lam_hi=2.0):
    """Random dense SPD matrix with eigenvalues in [lam_lo, lam_hi]."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = rng.uniform(lam_lo, lam_hi, size=n)
    return (q * lam) @ q.T


def scan_argmax(keys):
    """First index attaining the maximum — the heap-peek oracle."""
    return int(np.argmax(keys))
