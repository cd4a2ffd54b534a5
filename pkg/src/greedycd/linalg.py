"""Flat-array sparse matrices and an index-addressable max-heap.

The sparse container keeps both a compressed-column and a compressed-row
view of the same matrix: the incremental gradient trackers walk columns (to
update A x after a coordinate step) and rows (to push residual-gradient
changes back into A^T grad).  Construction canonicalises through
scipy.sparse, so duplicates are summed, explicit zeros dropped, and indices
sorted; index arrays are int64 and values float64 so the compiled kernels
see a single signature.
"""

import numpy as np
import scipy.io
import scipy.sparse

from . import _kernels


class SparseMatrix:
    """Immutable sparse matrix stored in both CSC and CSR layouts.

    Attributes
    ----------
    shape : (m, n)
    col_indptr, col_rows, col_vals : CSC arrays
    row_indptr, row_cols, row_vals : CSR arrays
    nnz : stored entries (z)
    max_col_nnz : densest column (c)
    max_row_nnz : densest row (r)
    """

    def __init__(self, scipy_matrix):
        coo = scipy.sparse.coo_matrix(scipy_matrix)
        coo.sum_duplicates()
        coo.eliminate_zeros()
        csc = coo.tocsc()
        csc.sort_indices()
        csr = coo.tocsr()
        csr.sort_indices()
        self.shape = csc.shape
        self.col_indptr = np.asarray(csc.indptr, dtype=np.int64)
        self.col_rows = np.asarray(csc.indices, dtype=np.int64)
        self.col_vals = np.asarray(csc.data, dtype=np.float64)
        self.row_indptr = np.asarray(csr.indptr, dtype=np.int64)
        self.row_cols = np.asarray(csr.indices, dtype=np.int64)
        self.row_vals = np.asarray(csr.data, dtype=np.float64)
        self.nnz = int(self.col_vals.shape[0])
        self.max_col_nnz = int(np.diff(self.col_indptr).max(initial=0))
        self.max_row_nnz = int(np.diff(self.row_indptr).max(initial=0))

    @classmethod
    def from_dense(cls, arr):
        return cls(scipy.sparse.coo_matrix(np.asarray(arr, dtype=np.float64)))

    @classmethod
    def from_coo(cls, m, n, rows, cols, vals):
        """Build from triplets; duplicate (row, col) pairs are summed."""
        coo = scipy.sparse.coo_matrix(
            (np.asarray(vals, dtype=np.float64), (rows, cols)), shape=(m, n))
        return cls(coo)

    def column(self, j):
        """(row indices, values) of column j, as views."""
        a, b = self.col_indptr[j], self.col_indptr[j + 1]
        return self.col_rows[a:b], self.col_vals[a:b]

    def row(self, i):
        """(column indices, values) of row i, as views."""
        a, b = self.row_indptr[i], self.row_indptr[i + 1]
        return self.row_cols[a:b], self.row_vals[a:b]

    def to_scipy_csc(self):
        m, n = self.shape
        return scipy.sparse.csc_matrix(
            (self.col_vals, self.col_rows, self.col_indptr), shape=(m, n))

    def to_dense(self):
        return self.to_scipy_csc().toarray()

    def matvec(self, x):
        return self.to_scipy_csc() @ x

    def rmatvec(self, y):
        return self.to_scipy_csc().T @ y

    def save_mtx(self, path):
        """Write as 1-based Matrix Market coordinate format."""
        scipy.io.mmwrite(str(path), self.to_scipy_csc())

    @classmethod
    def load_mtx(cls, path):
        return cls(scipy.sparse.coo_matrix(scipy.io.mmread(str(path))))


def spmv_column_update(A, j, delta, y):
    """y += delta * A e_j in O(nnz of column j); y is modified in place."""
    _kernels.col_axpy(A.col_indptr[j], A.col_indptr[j + 1],
                      A.col_rows, A.col_vals, delta, y)


def column_sq_norms(A):
    """||a_j||_2^2 for every column, as a dense vector."""
    m, n = A.shape
    out = np.zeros(n)
    cols = np.repeat(np.arange(n), np.diff(A.col_indptr))
    np.add.at(out, cols, A.col_vals ** 2)
    return out


def save_dense_mtx(path, arr):
    """Write a dense vector/matrix in Matrix Market array format."""
    arr = np.asarray(arr, dtype=np.float64)
    scipy.io.mmwrite(str(path), arr.reshape(-1, 1) if arr.ndim == 1 else arr)


def load_dense_mtx(path):
    out = np.asarray(scipy.io.mmread(str(path)), dtype=np.float64)
    if out.ndim == 2 and out.shape[1] == 1:
        return out.ravel()
    return out


class IndexedMaxHeap:
    """Max-heap over n float keys addressable by element index.

    Supports O(1) peek of the argmax, O(log n) key updates for arbitrary
    elements, and O(n) construction.  Ties on key resolve to the smallest
    element index, exactly matching the first argmax of a linear scan.
    """

    def __init__(self, keys):
        self.keys = np.array(keys, dtype=np.float64, copy=True)
        if self.keys.ndim != 1:
            raise ValueError("keys must be 1-D")
        self.n = self.keys.shape[0]
        self.order = np.arange(self.n, dtype=np.int64)
        self.pos = np.arange(self.n, dtype=np.int64)
        _kernels.heap_build(self.keys, self.order, self.pos)

    def __len__(self):
        return self.n

    def peek(self):
        """Element index holding the largest key (smallest index on ties)."""
        if self.n == 0:
            raise ValueError("peek on empty heap")
        return int(self.order[0])

    def peek_key(self):
        if self.n == 0:
            raise ValueError("peek on empty heap")
        return float(self.keys[self.order[0]])

    def update_key(self, i, key):
        """Replace the key of element i and restore heap order."""
        if not 0 <= i < self.n:
            raise IndexError(f"element index {i} out of range for heap of size {self.n}")
        _kernels.heap_update(self.keys, self.order, self.pos, i, float(key))
