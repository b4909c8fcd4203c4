"""Network-guided covariate selection: spectral basis, screening statistics, HC thresholding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from .linalg import SparseSymGraph, top_k_eigen, truncated_svd
from .netgen import laplacian
from .rstats import PValueMode, hct_select, pvalues

SOURCES = ("adj", "lap", "dsvd", "oracle", "external")
_ALIASES = {
    "AdjacencyEigen": "adj", "LaplacianEigen": "lap", "DirectedLeftSVD": "dsvd",
    "OracleY": "oracle", "External": "external",
}


@dataclass
class SpectralBasis:
    U: np.ndarray
    source: str = "external"

    def __post_init__(self):
        U = np.asarray(self.U, dtype=float)
        if U.ndim == 1:
            U = U[:, None]
        self.U = U
        self.source = _ALIASES.get(self.source, self.source)
        if self.source not in SOURCES:
            raise ValueError(f"unknown basis source {self.source!r}")
        if not np.allclose(U.T @ U, np.eye(U.shape[1]), atol=1e-8):
            raise ValueError("basis columns must be orthonormal")

    @property
    def khat(self) -> int:
        return self.U.shape[1]

    @property
    def n(self) -> int:
        return self.U.shape[0]


def build_basis(data, khat: int, source: str = "adj", seed: int = 0) -> SpectralBasis:
    """Orthonormal n x khat projection from a network (or from Y for the oracle).

    ``adj``/``lap`` take the top eigenvectors of A or D^{-1/2} A D^{-1/2}; ``dsvd`` takes the
    leading left singular vectors of a (possibly asymmetric) adjacency; ``oracle`` takes the
    left singular vectors of the latent matrix Y.
    """
    source = _ALIASES.get(source, source)
    if source == "oracle":
        Y = np.asarray(data, dtype=float)
        if khat > min(Y.shape):
            raise ValueError(f"khat={khat} exceeds rank bound of Y {Y.shape}")
        return SpectralBasis(truncated_svd(Y, khat).U, "oracle")
    if source == "external":
        return SpectralBasis(data, "external")
    if source in ("adj", "lap"):
        if not isinstance(data, SparseSymGraph):
            data = SparseSymGraph.from_dense(np.asarray(data.todense() if sp.issparse(data) else data))
        if khat > data.n:
            raise ValueError(f"khat={khat} exceeds node count {data.n}")
        op = data if source == "adj" else laplacian(data)
        return SpectralBasis(top_k_eigen(op, khat, seed=seed).vectors, source)
    if source == "dsvd":
        A = data.csr if isinstance(data, SparseSymGraph) else sp.csr_matrix(data, dtype=float)
        n = A.shape[0]
        if khat > n:
            raise ValueError(f"khat={khat} exceeds node count {n}")
        At = A.T.tocsr()
        gram = LinearOperator((n, n), matvec=lambda v: A @ (At @ v), dtype=float)
        U = top_k_eigen(gram, khat, seed=seed).vectors
        return SpectralBasis(U, "dsvd")
    raise ValueError(f"unknown basis source {source!r}")


def standardize_columns(X) -> np.ndarray:
    """Per-column z-scores; constant columns become zero."""
    X = np.asarray(X, dtype=float)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    return (X - X.mean(axis=0)) / sd


def screen(X, basis: SpectralBasis) -> np.ndarray:
    """t_j = ||U^T X_j||^2 for every column j."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != basis.n:
        raise ValueError(f"X has {X.shape[0] if X.ndim == 2 else '?'} rows, basis has {basis.n}")
    proj = basis.U.T @ X
    return np.einsum("kj,kj->j", proj, proj)


@dataclass
class SelectionResult:
    t: np.ndarray
    pi: np.ndarray
    order: np.ndarray
    hc: np.ndarray
    max_hc: float
    s_hat: int
    tested_nonempty: bool
    threshold: float
    selected: np.ndarray
    khat: int
    source: str

    @property
    def size(self) -> int:
        return int(self.selected.size)


def ngcs(A_or_basis, X, khat: int | None = None, pvalue_mode: PValueMode | str = "chi2",
         basis_source: str = "adj", standardize: bool = False, seed: int = 0,
         strict: bool = False, hc_denom: str = "quantile") -> SelectionResult:
    """Build basis -> screen -> p-values -> HC thresholding.

    ``A_or_basis`` is a graph/adjacency (basis built with ``basis_source``), a latent matrix
    when ``basis_source="oracle"``, or a ready :class:`SpectralBasis`.
    """
    if isinstance(pvalue_mode, str):
        pvalue_mode = PValueMode(pvalue_mode)
    if isinstance(A_or_basis, SpectralBasis):
        basis = A_or_basis
        if khat is not None and khat != basis.khat:
            raise ValueError("khat disagrees with the supplied basis")
    else:
        if khat is None:
            raise ValueError("khat is required when building a basis")
        basis = build_basis(A_or_basis, khat, basis_source, seed)
    if standardize:
        X = standardize_columns(X)
    t = screen(X, basis)
    pi = pvalues(t, basis.khat, pvalue_mode)
    hct = hct_select(pi, strict=strict, denom=hc_denom)
    return SelectionResult(t=t, pi=pi, order=hct.order, hc=hct.hc, max_hc=hct.max_hc,
                           s_hat=hct.s_hat, tested_nonempty=hct.tested_nonempty,
                           threshold=hct.threshold, selected=hct.selected,
                           khat=basis.khat, source=basis.source)


def top_ranked(scores, k: int, descending: bool = True) -> np.ndarray:
    """Indices of the ``k`` best scores (ties by index), returned sorted."""
    scores = np.asarray(scores, dtype=float)
    key = -scores if descending else scores
    return np.sort(np.argsort(key, kind="stable")[:k])


def tau_diagnostic(basis: SpectralBasis, Y, M, S) -> float:
    """min over j in S of ||U^T Y M_j||; +inf for empty S."""
    S = np.asarray(S, dtype=np.int64)
    if S.size == 0:
        return float("inf")
    signal = np.asarray(Y, dtype=float) @ np.asarray(M, dtype=float)[:, S]
    return float(np.linalg.norm(basis.U.T @ signal, axis=0).min())


def marginal_chi2_rank(X) -> np.ndarray:
    """Covariate indices ordered by column sum of squares, largest first, ties by index."""
    X = np.asarray(X, dtype=float)
    return np.argsort(-np.einsum("ij,ij->j", X, X), kind="stable")
