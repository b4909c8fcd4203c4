"""Linear-algebra kernels: sparse graph container, top-k eigenpairs, truncated SVD, k-means.

Dense matrices are plain ``numpy.ndarray`` objects (row-major, float64).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import LinearOperator

from .errors import ConvergenceError

log = logging.getLogger(__name__)

DENSE_CUTOFF = 256


@dataclass(frozen=True, eq=False)
class SparseSymGraph:
    """Undirected simple graph stored as its upper-triangle edge list (``rows[e] < cols[e]``)."""

    n: int
    rows: np.ndarray
    cols: np.ndarray
    degree: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64).ravel()
        cols = np.asarray(self.cols, dtype=np.int64).ravel()
        if rows.shape != cols.shape:
            raise ValueError("rows and cols must have equal length")
        if self.n < 0:
            raise ValueError("node count must be nonnegative")
        if rows.size:
            if rows.min() < 0 or cols.max() >= self.n:
                raise ValueError("edge endpoint out of range")
            if np.any(rows == cols):
                raise ValueError("self-loops are not allowed")
            if np.any(rows > cols):
                raise ValueError("edges must be stored with i < j")
            keys = rows * self.n + cols
            if np.unique(keys).size != keys.size:
                raise ValueError("duplicate edges")
        order = np.lexsort((cols, rows))
        rows, cols = rows[order], cols[order]
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        deg = np.bincount(rows, minlength=self.n) + np.bincount(cols, minlength=self.n)
        object.__setattr__(self, "degree", deg.astype(np.int64))

    @classmethod
    def from_edges(cls, n, edges):
        """Build from any iterable of ``(i, j)`` pairs; orientation is normalised to i < j."""
        e = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        return cls(n, np.minimum(e[:, 0], e[:, 1]), np.maximum(e[:, 0], e[:, 1]))

    @classmethod
    def from_dense(cls, A):
        A = np.asarray(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(A != 0, (A != 0).T):
            raise ValueError("adjacency is not symmetric")
        i, j = np.nonzero(np.triu(A != 0, k=1))
        return cls(A.shape[0], i, j)

    @property
    def n_edges(self) -> int:
        return int(self.rows.size)

    @cached_property
    def csr(self) -> sp.csr_matrix:
        data = np.ones(2 * self.n_edges)
        r = np.concatenate([self.rows, self.cols])
        c = np.concatenate([self.cols, self.rows])
        return sp.csr_matrix((data, (r, c)), shape=(self.n, self.n))

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()


class EigenResult(NamedTuple):
    values: np.ndarray
    vectors: np.ndarray


class SvdResult(NamedTuple):
    U: np.ndarray
    S: np.ndarray
    V: np.ndarray


class KMeansResult(NamedTuple):
    labels: np.ndarray
    centers: np.ndarray
    wcss: float


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive (first index wins ties)."""
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    s = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    s[s == 0] = 1.0
    return vectors * s


def _operator(op):
    """Return ``(n, matmat, dense_or_None, norm1_or_None)`` for a symmetric operator."""
    if isinstance(op, SparseSymGraph):
        op = op.csr
    if sp.issparse(op):
        op = sp.csr_matrix(op, dtype=float)
        if op.shape[0] != op.shape[1]:
            raise ValueError("operator must be square")
        norm1 = float(abs(op).sum(axis=0).max()) if op.nnz else 0.0
        return op.shape[0], op.dot, None, norm1
    if isinstance(op, LinearOperator):
        if op.shape[0] != op.shape[1]:
            raise ValueError("operator must be square")
        return op.shape[0], op.dot, None, None
    A = np.asarray(op, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("operator must be a square matrix")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.abs(A).max(initial=0.0)))
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12 * scale):
        raise ValueError("matrix is not symmetric")
    return A.shape[0], A.dot, A, float(np.abs(A).sum(axis=0).max(initial=0.0))


def _top_by_magnitude(values: np.ndarray, k: int) -> np.ndarray:
    return np.argsort(-np.abs(values), kind="stable")[:k]


def top_k_eigen(op, k: int, tol: float = 1e-10, max_iter: int | None = None, seed: int = 0,
                method: str = "auto") -> EigenResult:
    """Eigenpairs of a symmetric operator with the ``k`` largest |eigenvalues|.

    ``op`` may be a dense array, a scipy sparse matrix, a :class:`SparseSymGraph` or a
    ``LinearOperator``. Small dense inputs (n <= 256) go to LAPACK; everything else uses
    Lanczos with full reorthogonalisation. ``method`` forces ``"dense"`` or ``"lanczos"``.
    ``max_iter`` caps the Krylov dimension (default ``max(50 k, 100)``).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n, matmat, dense, norm1 = _operator(op)
    if k < 1 or k > n:
        raise ValueError(f"k={k} must lie in [1, n={n}]")
    if method not in ("auto", "dense", "lanczos"):
        raise ValueError(f"unknown method {method!r}")
    if method == "dense" or (method == "auto" and n <= DENSE_CUTOFF):
        if dense is None:
            dense = matmat(np.eye(n))
            dense = 0.5 * (dense + dense.T)
        w, v = np.linalg.eigh(dense)
        idx = _top_by_magnitude(w, k)
        return EigenResult(w[idx].copy(), fix_signs(v[:, idx]))
    if max_iter is None:
        max_iter = max(50 * k, 100)
    rng = np.random.default_rng(seed)
    values, vectors = _lanczos(matmat, n, k, tol, max_iter, rng, norm1)
    return EigenResult(values, fix_signs(vectors))


def _lanczos(matmat: Callable, n: int, k: int, tol: float, max_dim: int,
             rng: np.random.Generator, norm1: float | None):
    m_cap = min(n, max(max_dim, k))
    Q = np.zeros((n, m_cap))
    alpha: list[float] = []
    beta: list[float] = []
    q = rng.standard_normal(n)
    Q[:, 0] = q / np.linalg.norm(q)
    step = max(5, k)
    best = np.inf
    j = 0
    while True:
        w = matmat(Q[:, j])
        a = float(Q[:, j] @ w)
        w = w - a * Q[:, j]
        if j > 0:
            w -= beta[j - 1] * Q[:, j - 1]
        for _ in range(2):
            w -= Q[:, : j + 1] @ (Q[:, : j + 1].T @ w)
        b = float(np.linalg.norm(w))
        alpha.append(a)
        m = j + 1
        theta_max = None
        broke = False
        if m >= k and (m % step == 0 or m == m_cap):
            theta, S = eigh_tridiagonal(np.array(alpha), np.array(beta[: m - 1]))
            theta_max = float(np.abs(theta).max(initial=0.0))
            scale = tol * (1.0 + (norm1 if norm1 is not None else theta_max))
            idx = _top_by_magnitude(theta, k)
            est = np.abs(b * S[-1, idx])
            if m == n or est.max() <= scale:
                vals = theta[idx]
                vecs = Q[:, :m] @ S[:, idx]
                vecs /= np.linalg.norm(vecs, axis=0)
                res = np.linalg.norm(matmat(vecs) - vecs * vals, axis=0).max()
                best = min(best, float(res))
                if res <= scale:
                    return vals, vecs
        if m == m_cap:
            raise ConvergenceError(f"Lanczos did not converge within Krylov dimension {m_cap}", best)
        ref = theta_max if theta_max is not None else max(abs(a), 1.0)
        if b <= 1e-12 * max(ref, 1.0):
            # invariant subspace found: continue from a fresh direction orthogonal to it
            broke = True
            w = rng.standard_normal(n)
            for _ in range(2):
                w -= Q[:, :m] @ (Q[:, :m].T @ w)
            b = float(np.linalg.norm(w))
        beta.append(0.0 if broke else b)
        Q[:, m] = w / b
        j += 1


def truncated_svd(X, k: int) -> SvdResult:
    """Leading ``k`` singular triplets, signs fixed on U's columns with V following."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be a 2-D array")
    if k < 1 or k > min(X.shape):
        raise ValueError(f"k={k} must lie in [1, min{X.shape}]")
    U, S, Vt = np.linalg.svd(X, full_matrices=False)
    U, S, V = U[:, :k], S[:k], Vt[:k].T
    Uf = fix_signs(U)
    flip = np.where(np.sum(Uf * U, axis=0) < 0, -1.0, 1.0)
    return SvdResult(Uf, S.copy(), V * flip)


# ---------------------------------------------------------------------------
# k-means
# ---------------------------------------------------------------------------

def _sqdist(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("ikd,ikd->ik", diff, diff)


def kmeans_pp_init(points: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding. First center uniform, later ones by inverse-CDF on D^2."""
    n = points.shape[0]
    centers = np.empty((K, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for c in range(1, K):
        total = d2.sum()
        u = rng.random()
        if total > 0:
            i = int(np.searchsorted(np.cumsum(d2), u * total, side="right"))
            i = min(i, n - 1)
        else:
            i = int(u * n)
        centers[c] = points[i]
        d2 = np.minimum(d2, np.sum((points - centers[c]) ** 2, axis=1))
    return centers


def lloyd(points: np.ndarray, centers: np.ndarray, max_iter: int = 300, tol: float = 1e-6):
    """Lloyd iterations from given centers.

    Returns ``(labels, centers, wcss, history)`` where ``history`` holds the objective after
    every assignment step. An empty cluster is re-seeded at the point farthest from its
    current center.
    """
    centers = np.array(centers, dtype=float)
    K = centers.shape[0]
    history = []
    labels = None
    for _ in range(max_iter):
        d2 = _sqdist(points, centers)
        new_labels = np.argmin(d2, axis=1)
        own = d2[np.arange(points.shape[0]), new_labels]
        wcss = float(own.sum())
        done = labels is not None and (
            np.array_equal(new_labels, labels) or history[-1] - wcss <= tol * history[-1])
        labels = new_labels
        history.append(wcss)
        if done:
            break
        counts = np.bincount(labels, minlength=K)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, points)
        nonempty = counts > 0
        centers[nonempty] = sums[nonempty] / counts[nonempty, None]
        for c in np.flatnonzero(~nonempty):
            far = int(np.argmax(own))
            centers[c] = points[far]
            own[far] = -1.0
    return labels, centers, history[-1], history


def kmeans(points, K: int, n_init: int = 10, max_iter: int = 300, tol: float = 1e-6,
           seed: int = 0) -> KMeansResult:
    """Best-of-``n_init`` k-means++/Lloyd runs; restart ``r`` uses the r-th spawned child seed."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[0] == 0:
        raise ValueError("k-means needs at least one point")
    if K < 1 or K > points.shape[0]:
        raise ValueError(f"K={K} must lie in [1, {points.shape[0]}]")
    best = None
    for child in np.random.SeedSequence(seed).spawn(n_init):
        rng = np.random.default_rng(child)
        init = kmeans_pp_init(points, K, rng)
        labels, centers, wcss, _ = lloyd(points, init, max_iter, tol)
        if best is None or wcss < best.wcss:
            best = KMeansResult(labels, centers, wcss)
    return best
