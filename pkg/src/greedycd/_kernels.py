"""Inner-loop kernels shared by the heap, the trackers, and sparse updates.

Each kernel is written once, as a plain Python function over flat numpy
arrays, and is deliberately self-contained (no kernel calls another).  When
numba is importable and the environment variable GREEDYCD_NUMBA is not "0",
the public names are rebound to ``@njit(cache=True)`` builds of the same
functions.  The interpreted originals stay reachable under a ``py_`` prefix
so the benchmark can time both paths inside one process.

Index arrays are int64 and value arrays float64 throughout, so every kernel
compiles exactly once.
"""

import os

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None

NUMBA_ENABLED = njit is not None and os.environ.get("GREEDYCD_NUMBA", "1") != "0"


def heap_build(keys, order, pos):
    """Heapify ``order``/``pos`` in place for a max-heap over (keys[i], -i).

    ``order[k]`` is the element stored at heap slot k and ``pos[i]`` the slot
    of element i; the caller passes both filled with 0..n-1.  Key ties favour
    the smaller element index, so slot 0 always agrees with the first argmax
    of a fresh linear scan.
    """
    n = order.shape[0]
    for root in range(n // 2 - 1, -1, -1):
        k = root
        i = order[k]
        while True:
            c = 2 * k + 1
            if c >= n:
                break
            j = order[c]
            if c + 1 < n:
                j2 = order[c + 1]
                if (keys[j2] > keys[j]) or (keys[j2] == keys[j] and j2 < j):
                    c += 1
                    j = j2
            if (keys[j] > keys[i]) or (keys[j] == keys[i] and j < i):
                order[k] = j
                pos[j] = k
                k = c
            else:
                break
        order[k] = i
        pos[i] = k


def heap_update(keys, order, pos, i, new_key):
    """Set keys[i] = new_key and restore the heap in O(log n)."""
    keys[i] = new_key
    n = order.shape[0]
    k = pos[i]
    while k > 0:
        p = (k - 1) // 2
        j = order[p]
        if (new_key > keys[j]) or (new_key == keys[j] and i < j):
            order[k] = j
            pos[j] = k
            k = p
        else:
            break
    while True:
        c = 2 * k + 1
        if c >= n:
            break
        j = order[c]
        if c + 1 < n:
            j2 = order[c + 1]
            if (keys[j2] > keys[j]) or (keys[j2] == keys[j] and j2 < j):
                c += 1
                j = j2
        if (keys[j] > new_key) or (keys[j] == new_key and j < i):
            order[k] = j
            pos[j] = k
            k = c
        else:
            break
    order[k] = i
    pos[i] = k


def col_axpy(start, end, rows, vals, delta, y):
    """y += delta * (sparse column), the column given as rows/vals[start:end]."""
    for t in range(start, end):
        y[rows[t]] += delta * vals[t]


def scatter_row_deltas(rows, dg, row_indptr, row_cols, row_vals, target,
                       stamp, gen, touched):
    """target[c] += dg[r] * A[rows[r], c] for every stored entry of each row.

    Collects the distinct columns hit into ``touched`` using the stamp/gen
    trick (stamp[c] == gen means "already collected this call", so the caller
    must bump ``gen`` between calls).  Returns the number of distinct columns.
    """
    ncols = 0
    for r in range(rows.shape[0]):
        row = rows[r]
        d = dg[r]
        for t in range(row_indptr[row], row_indptr[row + 1]):
            c = row_cols[t]
            target[c] += d * row_vals[t]
            if stamp[c] != gen:
                stamp[c] = gen
                touched[ncols] = c
                ncols += 1
    return ncols


def graph_coord_update(i, new_xi, x, indptr, nbr, w, rev, part, grad, q, b):
    """Move x[i] to new_xi on a pairwise-quadratic graph objective.

    ``part[k]`` caches w_k * (x[u] - x[v]) for the directed edge slot k
    (u -> v); ``rev[k]`` is the opposite slot.  Refreshes the partials of the
    edges incident to i, differentially updates each neighbour's gradient
    entry, recomputes grad[i] outright, and returns the objective change
    computed from the touched terms only (node term q/2 x^2 - b x plus the
    incident edge energies).
    """
    old = x[i]
    x[i] = new_xi
    dobj = 0.5 * q[i] * (new_xi * new_xi - old * old) - b[i] * (new_xi - old)
    s = q[i] * new_xi - b[i]
    for k in range(indptr[i], indptr[i + 1]):
        j = nbr[k]
        xj = x[j]
        a_new = new_xi - xj
        a_old = old - xj
        dobj += 0.5 * w[k] * (a_new * a_new - a_old * a_old)
        pik = w[k] * a_new
        part[k] = pik
        s += pik
        kr = rev[k]
        grad[j] += -pik - part[kr]
        part[kr] = -pik
    grad[i] = s
    return dobj


py_heap_build = heap_build
py_heap_update = heap_update
py_col_axpy = col_axpy
py_scatter_row_deltas = scatter_row_deltas
py_graph_coord_update = graph_coord_update

if NUMBA_ENABLED:
    heap_build = njit(cache=True)(heap_build)
    heap_update = njit(cache=True)(heap_update)
    col_axpy = njit(cache=True)(col_axpy)
    scatter_row_deltas = njit(cache=True)(scatter_row_deltas)
    graph_coord_update = njit(cache=True)(graph_coord_update)
