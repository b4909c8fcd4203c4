"""Two-study applications: network-guided clustering (NG-clu) and regression (NG-reg)."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import EmptySelectionError
from .linalg import kmeans, truncated_svd
from .selection import SelectionResult, ngcs

log = logging.getLogger(__name__)


@dataclass
class ClusterOutput:
    labels: np.ndarray
    embedding: np.ndarray
    selected: np.ndarray
    khat: int
    fallback: bool = False
    selection: SelectionResult | None = None


@dataclass
class RegressionOutput:
    gamma_hat: np.ndarray
    selected: np.ndarray
    khat: int
    p: int
    selection: SelectionResult | None = None


def _select(A, X1, khat, selection, **ngcs_kw) -> SelectionResult:
    if selection is not None:
        return selection
    return ngcs(A, X1, khat, **ngcs_kw)


def ng_clu(A, X1, Xtilde, K: int, khat: int, seed: int = 0, selection: SelectionResult | None = None,
           n_init: int = 10, **ngcs_kw) -> ClusterOutput:
    """Cluster all N subjects with k-means on U_Khat Lambda_Khat of Xtilde restricted to Ŝ.

    When NGCS selects nothing, the full Xtilde is embedded and ``fallback`` is set. ``khat``
    is lowered to the number of available columns if needed.
    """
    Xtilde = np.asarray(Xtilde, dtype=float)
    X1 = np.asarray(X1, dtype=float)
    if Xtilde.size == 0:
        raise ValueError("Xtilde is empty")
    if Xtilde.shape[1] != X1.shape[1] or Xtilde.shape[0] < X1.shape[0]:
        raise ValueError("Xtilde must have N >= n rows and the same columns as X1")
    if not 1 <= K <= Xtilde.shape[0]:
        raise ValueError("K must lie in [1, N]")
    sel = _select(A, X1, khat, selection, seed=seed, **ngcs_kw)
    fallback = sel.selected.size == 0
    cols = np.arange(Xtilde.shape[1]) if fallback else sel.selected
    if fallback:
        log.info("ng_clu: empty selection, embedding the full covariate matrix")
    sub = Xtilde[:, cols]
    k_use = min(khat, *sub.shape)
    if k_use < khat:
        log.info("ng_clu: khat lowered from %d to %d", khat, k_use)
    svd = truncated_svd(sub, k_use)
    embedding = svd.U * svd.S
    labels = kmeans(embedding, K, n_init=n_init, seed=seed).labels
    return ClusterOutput(labels, embedding, sel.selected, k_use, fallback, sel)


def clustering_error(est, true, K: int | None = None, method: str = "auto") -> float:
    """Misclassification rate minimised over relabelings of the estimated clusters.

    ``method="exhaustive"`` enumerates all K! permutations (K <= 12); ``"assignment"`` solves
    the equivalent linear assignment problem; ``"auto"`` enumerates for K <= 8.
    """
    est = np.asarray(est)
    true = np.asarray(true)
    if est.shape != true.shape:
        raise ValueError("label vectors must have equal length")
    if est.size == 0:
        return 0.0
    est_ids, est_codes = np.unique(est, return_inverse=True)
    true_ids, true_codes = np.unique(true, return_inverse=True)
    if K is not None and est_ids.size > K:
        raise ValueError("more distinct estimated labels than K")
    # square confusion matrix; extra true classes can only be matched by nothing
    K = max(K or 0, est_ids.size, true_ids.size)
    C = np.zeros((K, K), dtype=np.int64)
    np.add.at(C, (est_codes, true_codes), 1)
    if method == "auto":
        method = "exhaustive" if K <= 8 else "assignment"
    if method == "exhaustive":
        if K > 12:
            raise ValueError("exhaustive matching is limited to K <= 12")
        rows = np.arange(K)
        best = max(C[rows, list(perm)].sum() for perm in itertools.permutations(range(K)))
    elif method == "assignment":
        r, c = linear_sum_assignment(C, maximize=True)
        best = C[r, c].sum()
    else:
        raise ValueError(f"unknown method {method!r}")
    return 1.0 - best / est.size


def ng_reg(A, X1, X2, z, khat: int, seed: int = 0, selection: SelectionResult | None = None,
           rcond: float = 1e-10, **ngcs_kw) -> RegressionOutput:
    """gamma = V_Khat Lambda_Khat^{-1} U_Khat^T z from the SVD of X2 restricted to Ŝ.

    Singular values below ``rcond`` times the largest are left out of the inversion.
    """
    X1 = np.asarray(X1, dtype=float)
    X2 = np.asarray(X2, dtype=float)
    z = np.asarray(z, dtype=float).ravel()
    if not np.all(np.isfinite(z)):
        raise ValueError("z contains non-finite values")
    if X2.shape[0] != z.size:
        raise ValueError("X2 rows must match the length of z")
    if X1.shape[1] != X2.shape[1]:
        raise ValueError("X1 and X2 must share the covariate dimension")
    sel = _select(A, X1, khat, selection, seed=seed, **ngcs_kw)
    if sel.selected.size == 0:
        raise EmptySelectionError(
            "NGCS selected no covariates; fall back to a regression on all covariates")
    sub = X2[:, sel.selected]
    k_use = min(khat, *sub.shape)
    svd = truncated_svd(sub, k_use)
    keep = svd.S > rcond * max(svd.S[0], 0.0) if svd.S[0] > 0 else np.zeros(k_use, dtype=bool)
    gamma = svd.V[:, keep] @ ((svd.U[:, keep].T @ z) / svd.S[keep])
    return RegressionOutput(gamma, sel.selected, k_use, X1.shape[1], sel)


def predict(model: RegressionOutput, x_new) -> np.ndarray | float:
    """gamma^T x_new restricted to Ŝ. Accepts one p-vector or an (m x p) matrix."""
    x = np.asarray(x_new, dtype=float)
    if x.shape[-1] != model.p:
        raise ValueError(f"expected {model.p} covariates, got {x.shape[-1]}")
    out = x[..., model.selected] @ model.gamma_hat
    return float(out) if x.ndim == 1 else out
