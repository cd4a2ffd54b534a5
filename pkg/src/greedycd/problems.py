"""Objectives with coordinate-wise structure.

Smooth problems expose the pieces coordinate descent needs: per-coordinate
Lipschitz constants L_i (from curvature along each axis), cheap coordinate
gradients, and exact 1-D minimisation.  The two "linear composition" classes
(least squares, logistic) additionally expose per-row link derivatives so the
incremental tracker can maintain A x, grad of the row sum, and A^T grad.
Composite problems add a separable term g_i per coordinate, one of
lam*|x_i|, a box indicator, or zero, together with proximal steps, the
model decrease V_i, and minimal subgradients.
"""

import numpy as np
import scipy.sparse
from scipy.special import expit

from .linalg import SparseMatrix, column_sq_norms

ZERO, ABS, BOX = 0, 1, 2


class ZeroTerm:
    """g(x) = 0."""
    kind = ZERO
    p1 = 0.0
    p2 = 0.0


class L1Term:
    """g(x) = lam * |x|."""
    kind = ABS

    def __init__(self, lam):
        if lam < 0:
            raise ValueError("l1 weight must be nonnegative")
        self.p1 = float(lam)
        self.p2 = 0.0


class BoxTerm:
    """g(x) = 0 on [lo, hi], +inf outside."""
    kind = BOX

    def __init__(self, lo, hi):
        if lo > hi:
            raise ValueError("empty box")
        self.p1 = float(lo)
        self.p2 = float(hi)


def term_value(term, v):
    """g(v) for a single coordinate."""
    if term.kind == ABS:
        return term.p1 * abs(v)
    if term.kind == BOX:
        return 0.0 if term.p1 <= v <= term.p2 else np.inf
    return 0.0


def prox_coordinate(term, alpha, y):
    """argmin_z  (1/(2*alpha)) (z - y)^2 + term(z), for one coordinate."""
    if alpha <= 0:
        raise ValueError("prox step size must be positive")
    if term.kind == ZERO:
        return y
    if term.kind == ABS:
        t = alpha * term.p1
        return np.sign(y) * max(abs(y) - t, 0.0)
    return min(max(y, term.p1), term.p2)


class SmoothProblem:
    """Interface shared by the smooth objectives.

    Subclasses set ``n``, ``L_per_coord`` (positive where the coordinate
    matters), and ``is_quadratic``, and implement ``eval``, ``full_grad``,
    ``grad_coord`` and ``exact_coord_min``.  ``L1``, the Lipschitz constant
    of the gradient in the 1-norm, is only available for quadratics
    (max |H_ij|) and is None otherwise.
    """

    is_quadratic = False
    L1 = None

    @property
    def L(self):
        return float(self.L_per_coord.max())

    def grad_coord(self, x, i):
        return float(self.full_grad(x)[i])

    def exact_coord_min(self, x, i):
        raise NotImplementedError


class LeastSquaresProblem(SmoothProblem):
    """f(x) = scale * ||A x - b||^2 + (l2_reg / 2) ||x||^2.

    ``scale`` is the factor on the squared residual itself, e.g. 0.5 for the
    plain half-squared loss or 1/(2 m) for the mean version.
    """

    is_quadratic = True
    tracker_kind = "h1"

    def __init__(self, A, b, l2_reg=0.0, scale=0.5):
        if not isinstance(A, SparseMatrix):
            A = SparseMatrix.from_dense(np.asarray(A, dtype=np.float64))
        b = np.asarray(b, dtype=np.float64)
        if b.shape != (A.shape[0],):
            raise ValueError("b must have one entry per row of A")
        if scale <= 0:
            raise ValueError("scale must be positive")
        if l2_reg < 0:
            raise ValueError("l2_reg must be nonnegative")
        self.A = A
        self.b = b
        self.l2_reg = float(l2_reg)
        self.scale = float(scale)
        self.n = A.shape[1]
        self.L_per_coord = 2.0 * self.scale * column_sq_norms(A) + self.l2_reg
        self._hess = None
        self._L1 = None

    def eval(self, x):
        r = self.A.matvec(x) - self.b
        return float(self.scale * r @ r + 0.5 * self.l2_reg * x @ x)

    def full_grad(self, x):
        r = self.A.matvec(x) - self.b
        return 2.0 * self.scale * self.A.rmatvec(r) + self.l2_reg * x

    def grad_coord(self, x, i, Ax=None):
        u = self.A.matvec(x) if Ax is None else Ax
        rows, vals = self.A.column(i)
        return float(2.0 * self.scale * ((u[rows] - self.b[rows]) @ vals)
                     + self.l2_reg * x[i])

    def hessian(self):
        """Dense Hessian 2*scale*A^T A + l2_reg*I (intended for small n)."""
        if self._hess is None:
            sp = self.A.to_scipy_csc()
            H = (2.0 * self.scale) * (sp.T @ sp).toarray()
            H[np.diag_indices_from(H)] += self.l2_reg
            self._hess = H
        return self._hess

    @property
    def L1(self):
        if self._L1 is None:
            sp = self.A.to_scipy_csc()
            G = (2.0 * self.scale) * (sp.T @ sp)
            G = G.tolil()
            G.setdiag(G.diagonal() + self.l2_reg)
            data = G.tocoo().data
            self._L1 = float(np.abs(data).max()) if data.size else 0.0
        return self._L1

    def exact_coord_min(self, x, i, Ax=None):
        """Minimiser of f along coordinate i: x_i - grad_i / H_ii."""
        h = self.L_per_coord[i]
        if h == 0.0:
            return float(x[i])
        return float(x[i] - self.grad_coord(x, i, Ax=Ax) / h)

    # per-row link, used by the incremental tracker
    def row_val(self, u, rows):
        d = u[rows] - self.b[rows]
        return self.scale * d * d

    def row_grad(self, u, rows):
        return 2.0 * self.scale * (u[rows] - self.b[rows])


class LogisticProblem(SmoothProblem):
    """f(x) = (1/m) sum_j log(1 + exp(-y_j a_j^T x)) + (l2_reg / 2) ||x||^2."""

    tracker_kind = "h1"

    def __init__(self, A, labels, l2_reg=0.0):
        if not isinstance(A, SparseMatrix):
            A = SparseMatrix.from_dense(np.asarray(A, dtype=np.float64))
        y = np.asarray(labels, dtype=np.float64)
        if y.shape != (A.shape[0],):
            raise ValueError("labels must have one entry per row of A")
        if not np.all(np.abs(y) == 1.0):
            raise ValueError("labels must be +/-1")
        if l2_reg < 0:
            raise ValueError("l2_reg must be nonnegative")
        self.A = A
        self.y = y
        self.l2_reg = float(l2_reg)
        self.n = A.shape[1]
        self.m = A.shape[0]
        self.L_per_coord = (0.25 / self.m) * column_sq_norms(A) + self.l2_reg

    def eval(self, x):
        u = self.A.matvec(x)
        return float(np.logaddexp(0.0, -self.y * u).sum() / self.m
                     + 0.5 * self.l2_reg * x @ x)

    def full_grad(self, x):
        u = self.A.matvec(x)
        s = -self.y * expit(-self.y * u) / self.m
        return self.A.rmatvec(s) + self.l2_reg * x

    def grad_coord(self, x, i, Ax=None):
        u = self.A.matvec(x) if Ax is None else Ax
        rows, vals = self.A.column(i)
        s = -self.y[rows] * expit(-self.y[rows] * u[rows]) / self.m
        return float(s @ vals + self.l2_reg * x[i])

    def row_val(self, u, rows):
        return np.logaddexp(0.0, -self.y[rows] * u[rows]) / self.m

    def row_grad(self, u, rows):
        yr = self.y[rows]
        return -yr * expit(-yr * u[rows]) / self.m

    def exact_coord_min(self, x, i, Ax=None, tol=1e-12, max_iter=50):
        """Safeguarded 1-D Newton along coordinate i.

        Brackets a sign change of the directional derivative, runs Newton
        clipped to the bracket with bisection as fallback, and finally keeps
        whichever of the Newton point and the plain 1/L_i step has the lower
        objective, so the standard per-step progress bound always holds.
        """
        u = self.A.matvec(x) if Ax is None else Ax
        rows, vals = self.A.column(i)
        yr = self.y[rows]
        ur = u[rows]
        xi = float(x[i])
        lam = self.l2_reg
        Li = self.L_per_coord[i]

        def dphi(a):
            t = yr * (ur + a * vals)
            return float((-yr * expit(-t) / self.m) @ vals + lam * (xi + a))

        def d2phi(a):
            t = yr * (ur + a * vals)
            sig = expit(t)
            return float((sig * (1.0 - sig) / self.m) @ (vals * vals) + lam)

        def phi(a):
            t = -yr * (ur + a * vals)
            return float(np.logaddexp(0.0, t).sum() / self.m
                         + 0.5 * lam * (xi + a) ** 2)

        g0 = dphi(0.0)
        if Li == 0.0 or g0 == 0.0:
            return xi
        fallback = -g0 / Li

        # bracket [lo, hi] with dphi(lo) <= 0 <= dphi(hi)
        if g0 > 0:
            hi, lo = 0.0, fallback
            for _ in range(60):
                if dphi(lo) <= 0:
                    break
                lo *= 2.0
            else:
                return xi + fallback
        else:
            lo, hi = 0.0, fallback
            for _ in range(60):
                if dphi(hi) >= 0:
                    break
                hi *= 2.0
            else:
                return xi + fallback

        a = 0.0
        g = g0
        converged = False
        for _ in range(max_iter):
            if abs(g) <= tol:
                converged = True
                break
            h = d2phi(a)
            step = a - g / h if h > 0 else 0.5 * (lo + hi)
            if not lo <= step <= hi:
                step = 0.5 * (lo + hi)
            a = step
            g = dphi(a)
            if g > 0:
                hi = a
            else:
                lo = a
        if not converged and abs(g) > tol:
            a = fallback if phi(fallback) <= phi(a) else a
        if phi(fallback) < phi(a):
            a = fallback
        return xi + a


class GraphQuadraticProblem(SmoothProblem):
    """f(x) = sum_i (q_i/2 x_i^2 - b_i x_i) + sum_(u,v) (w/2)(x_u - x_v)^2 + c0.

    Pairwise terms live on an undirected graph; the node terms absorb any
    per-node quadratic penalty and the pull of clamped (labeled) neighbours.
    """

    is_quadratic = True
    tracker_kind = "h2"

    def __init__(self, n, edges, weights, node_quad=None, node_lin=None,
                 const=0.0):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (edges.shape[0],):
            raise ValueError("one weight per edge required")
        if edges.size and (edges.min() < 0 or edges.max() >= n):
            raise ValueError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ValueError("self-loops are not allowed")
        keys = set(map(tuple, np.sort(edges, axis=1)))
        if len(keys) != edges.shape[0]:
            raise ValueError("duplicate edges are not allowed")
        if np.any(weights < 0):
            raise ValueError("edge weights must be nonnegative")
        self.n = int(n)
        self.edges = edges
        self.weights = weights
        self.node_quad = (np.zeros(n) if node_quad is None
                          else np.asarray(node_quad, dtype=np.float64).copy())
        self.node_lin = (np.zeros(n) if node_lin is None
                         else np.asarray(node_lin, dtype=np.float64).copy())
        self.const = float(const)

        # directed adjacency in CSR layout, plus the reverse-slot map
        heads = np.concatenate([edges[:, 0], edges[:, 1]])
        tails = np.concatenate([edges[:, 1], edges[:, 0]])
        wdir = np.concatenate([weights, weights])
        slot_order = np.argsort(heads, kind="stable")
        self.adj_indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self.adj_indptr, heads + 1, 1)
        np.cumsum(self.adj_indptr, out=self.adj_indptr)
        self.adj_nbr = tails[slot_order]
        self.adj_w = wdir[slot_order]
        nslots = heads.shape[0]
        twin = np.concatenate([np.arange(edges.shape[0], nslots),
                               np.arange(0, edges.shape[0])])
        inv = np.empty(nslots, dtype=np.int64)
        inv[slot_order] = np.arange(nslots)
        self.adj_rev = inv[twin[slot_order]]

        deg_w = np.zeros(n)
        np.add.at(deg_w, heads, wdir)
        self.L_per_coord = self.node_quad + deg_w
        self.max_degree = int(np.diff(self.adj_indptr).max(initial=0))

        lap = scipy.sparse.coo_matrix(
            (np.concatenate([deg_w + self.node_quad, -wdir]),
             (np.concatenate([np.arange(n), heads]),
              np.concatenate([np.arange(n), tails]))), shape=(n, n))
        self._H = lap.tocsr()
        self._L1 = float(np.abs(self._H.data).max()) if self._H.nnz else 0.0

    @classmethod
    def from_labeled_graph(cls, n_nodes, edges, weights, labeled,
                           node_reg=0.0):
        """Label-propagation energy over the unlabeled nodes.

        ``labeled`` maps node id -> clamped value.  Edges touching a labeled
        node become quadratic pulls on the free endpoint; edges between two
        labeled nodes only shift the constant.  Returns (problem, free_nodes)
        where free_nodes[i] is the original id of variable i.
        """
        labeled = dict(labeled)
        free = [v for v in range(n_nodes) if v not in labeled]
        var_of = {v: i for i, v in enumerate(free)}
        nv = len(free)
        reg = np.broadcast_to(np.asarray(node_reg, dtype=np.float64),
                              (n_nodes,))
        node_quad = np.array([reg[v] for v in free])
        node_lin = np.zeros(nv)
        const = 0.0
        keep_edges, keep_w = [], []
        for (a, b), w in zip(np.asarray(edges).reshape(-1, 2),
                             np.asarray(weights, dtype=np.float64)):
            a, b = int(a), int(b)
            if a in labeled and b in labeled:
                const += 0.5 * w * (labeled[a] - labeled[b]) ** 2
            elif a in labeled:
                i = var_of[b]
                node_quad[i] += w
                node_lin[i] += w * labeled[a]
                const += 0.5 * w * labeled[a] ** 2
            elif b in labeled:
                i = var_of[a]
                node_quad[i] += w
                node_lin[i] += w * labeled[b]
                const += 0.5 * w * labeled[b] ** 2
            else:
                keep_edges.append((var_of[a], var_of[b]))
                keep_w.append(w)
        prob = cls(nv, np.array(keep_edges, dtype=np.int64).reshape(-1, 2),
                   np.array(keep_w), node_quad=node_quad, node_lin=node_lin,
                   const=const)
        return prob, np.array(free, dtype=np.int64)

    def eval(self, x):
        quad = 0.5 * float(x @ (self._H @ x))
        return quad - float(self.node_lin @ x) + self.const

    def full_grad(self, x):
        return self._H @ x - self.node_lin

    def grad_coord(self, x, i):
        a, b = self.adj_indptr[i], self.adj_indptr[i + 1]
        nbr = self.adj_nbr[a:b]
        w = self.adj_w[a:b]
        return float(self.node_quad[i] * x[i] - self.node_lin[i]
                     + w @ (x[i] - x[nbr]))

    def hessian(self):
        return self._H.toarray()

    @property
    def L1(self):
        return self._L1

    def exact_coord_min(self, x, i):
        h = self.L_per_coord[i]
        if h == 0.0:
            return float(x[i])
        return float(x[i] - self.grad_coord(x, i) / h)


class CompositeProblem:
    """F(x) = smooth.eval(x) + sum_i g_i(x_i), g_i separable and convex.

    ``terms`` is one term applied to every coordinate, or a length-n list.
    """

    def __init__(self, smooth, terms):
        self.smooth = smooth
        n = smooth.n
        if not isinstance(terms, (list, tuple)):
            terms = [terms] * n
        if len(terms) != n:
            raise ValueError("need one separable term per coordinate")
        self.terms = list(terms)
        self.gkind = np.array([t.kind for t in self.terms], dtype=np.int8)
        self.p1 = np.array([t.p1 for t in self.terms])
        self.p2 = np.array([t.p2 for t in self.terms])
        self.n = n

    @property
    def L_per_coord(self):
        return self.smooth.L_per_coord

    @property
    def L(self):
        return self.smooth.L

    def g_values(self, x):
        out = np.zeros(self.n)
        a = self.gkind == ABS
        out[a] = self.p1[a] * np.abs(x[a])
        b = self.gkind == BOX
        bad = b & ((x < self.p1) | (x > self.p2))
        out[bad] = np.inf
        return out

    def eval(self, x):
        return float(self.smooth.eval(x) + self.g_values(x).sum())

    def prox_steps(self, x, grad, L_used, idx=None):
        """Candidate moves under curvature L_used, for all coordinates or
        for the subset ``idx`` (x and grad are always full-length).

        Returns (d, V, s): the prox step d_i, the model decrease
        V_i = grad_i d_i + (L_i/2) d_i^2 + g_i(x_i+d_i) - g_i(x_i) <= 0, and
        the subgradient s_i = -(grad_i + L_i d_i), the element of
        dg_i(x_i + d_i) picked out by the prox optimality condition.
        L_used may be scalar or per-coordinate.
        """
        L = np.broadcast_to(np.asarray(L_used, dtype=np.float64), (self.n,))
        if idx is None:
            idx = slice(None)
        x = x[idx]
        grad = grad[idx]
        Ls = np.where(L[idx] > 0, L[idx], 1.0)
        kind = self.gkind[idx]
        p1 = self.p1[idx]
        p2 = self.p2[idx]
        y = x - grad / Ls
        z = y.copy()
        a = kind == ABS
        t = p1[a] / Ls[a]
        z[a] = np.sign(y[a]) * np.maximum(np.abs(y[a]) - t, 0.0)
        b = kind == BOX
        z[b] = np.clip(y[b], p1[b], p2[b])
        d = z - x
        gx = np.where(a, p1 * np.abs(x), 0.0)
        gz = np.where(a, p1 * np.abs(z), 0.0)
        V = grad * d + 0.5 * Ls * d * d + gz - gx
        s = -(grad + Ls * d)
        return d, V, s

    def min_subgradients(self, x, grad, idx=None):
        """eta_i = argmin_{s in dg_i(x_i)} |grad_i + s|, the first-order
        residual GS-s scores |eta_i| are built from."""
        if idx is None:
            idx = slice(None)
        x = x[idx]
        grad = grad[idx]
        kind = self.gkind[idx]
        p1 = self.p1[idx]
        p2 = self.p2[idx]
        eta = grad.copy()
        a = kind == ABS
        nz = a & (x != 0)
        eta[nz] = grad[nz] + p1[nz] * np.sign(x[nz])
        z0 = a & (x == 0)
        eta[z0] = np.sign(grad[z0]) * np.maximum(np.abs(grad[z0]) - p1[z0], 0.0)
        b = kind == BOX
        at_lo = b & (x <= p1)
        eta[at_lo] = np.minimum(grad[at_lo], 0.0)
        at_hi = b & (x >= p2)
        eta[at_hi] = np.maximum(grad[at_hi], 0.0)
        eta[at_lo & at_hi] = 0.0
        return eta

    def exact_coord_min(self, x, i, grad_i=None):
        """Exact minimiser of F along coordinate i (quadratic smooth part)."""
        if not self.smooth.is_quadratic:
            raise ValueError("exact composite coordinate step needs a quadratic smooth part")
        h = self.smooth.L_per_coord[i]
        if grad_i is None:
            grad_i = self.smooth.grad_coord(x, i)
        if h == 0.0:
            h = 1.0
        return prox_coordinate(self.terms[i], 1.0 / h, x[i] - grad_i / h)


def quadratic_problem(H, b):
    """General strongly convex quadratic 0.5 x^T H x - b^T x (+ const >= 0),
    realised as a least-squares problem through a Cholesky factor so all the
    sparse machinery applies.  H must be symmetric positive definite."""
    H = np.asarray(H, dtype=np.float64)
    C = np.linalg.cholesky(H).T
    d = np.linalg.solve(C.T, np.asarray(b, dtype=np.float64))
    return LeastSquaresProblem(SparseMatrix.from_dense(C), d, scale=0.5)
