"""Chi-square tail probabilities, Hanson-Wright p-value bounds and Higher Criticism thresholding."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

PI_FLOOR = 1e-300
PI_CEIL = 1.0 - 1e-12

_EPS = 1e-16
_TINY = 1e-300
_MAX_TERMS = 2000


def _gamma_series(a: float, x: np.ndarray) -> np.ndarray:
    """Regularized lower incomplete gamma P(a, x) by its power series (x < a + 1)."""
    ap = np.full_like(x, a)
    term = np.full_like(x, 1.0 / a)
    total = term.copy()
    active = np.ones(x.shape, dtype=bool)
    for _ in range(_MAX_TERMS):
        ap[active] += 1.0
        term[active] *= x[active] / ap[active]
        total[active] += term[active]
        active &= np.abs(term) > np.abs(total) * _EPS
        if not active.any():
            break
    return total * np.exp(-x + a * np.log(x) - math.lgamma(a))


def _gamma_cf(a: float, x: np.ndarray) -> np.ndarray:
    """Regularized upper incomplete gamma Q(a, x) by modified Lentz continued fraction (x >= a + 1)."""
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / _TINY)
    d = 1.0 / b
    h = d.copy()
    active = np.ones(x.shape, dtype=bool)
    for i in range(1, _MAX_TERMS):
        an = -i * (i - a)
        b = b + 2.0
        d_new = an * d + b
        d_new = np.where(np.abs(d_new) < _TINY, _TINY, d_new)
        c_new = b + an / c
        c_new = np.where(np.abs(c_new) < _TINY, _TINY, c_new)
        d_new = 1.0 / d_new
        delta = d_new * c_new
        d = np.where(active, d_new, d)
        c = np.where(active, c_new, c)
        h = np.where(active, h * delta, h)
        active &= np.abs(delta - 1.0) > _EPS
        if not active.any():
            break
    return np.exp(-x + a * np.log(x) - math.lgamma(a)) * h


def _upper_lower(x, df):
    if df < 1:
        raise ValueError("df must be >= 1")
    x = np.asarray(x, dtype=float)
    if np.any(np.isnan(x)) or np.any(x < 0):
        raise ValueError("chi-square argument must be >= 0")
    a = 0.5 * df
    h = 0.5 * np.atleast_1d(x).astype(float)
    upper = np.ones_like(h)
    lower = np.zeros_like(h)
    pos = h > 0
    ser = pos & (h < a + 1.0)
    cf = pos & ~ser
    if ser.any():
        lower[ser] = _gamma_series(a, h[ser])
        upper[ser] = 1.0 - lower[ser]
    if cf.any():
        upper[cf] = _gamma_cf(a, h[cf])
        lower[cf] = 1.0 - upper[cf]
    upper[np.isinf(h)] = 0.0
    lower[np.isinf(h)] = 1.0
    return x, np.clip(upper, 0.0, 1.0), np.clip(lower, 0.0, 1.0)


def chi2_sf(x, df: int):
    """P(chi2_df > x). Accepts scalars or arrays."""
    x, upper, _ = _upper_lower(x, df)
    return float(upper[0]) if x.ndim == 0 else upper.reshape(x.shape)


def chi2_cdf(x, df: int):
    x, _, lower = _upper_lower(x, df)
    return float(lower[0]) if x.ndim == 0 else lower.reshape(x.shape)


@dataclass(frozen=True)
class PValueMode:
    """How screening statistics become p-values.

    ``variant="chi2"`` uses the chi-square tail with ``Khat`` degrees of freedom;
    ``variant="hw"`` uses the Hanson-Wright bound with variance proxy ``sigma_sg2`` and constant ``c``.
    """

    variant: Literal["chi2", "hw"] = "chi2"
    sigma_sg2: float = 1.0
    c: float = 1.0 / 96.0

    def __post_init__(self):
        if self.variant not in ("chi2", "hw"):
            raise ValueError(f"unknown p-value variant {self.variant!r}")
        if not self.sigma_sg2 > 0:
            raise ValueError("sigma_sg2 must be positive")
        if not 0 < self.c <= 1:
            raise ValueError("c must lie in (0, 1]")


def hw_pvalue(t, khat: int, mode: PValueMode | None = None):
    """min{exp(-c min{(t-K)^2 / (K^2 s^4), (t-K) / s^2}), 1} with s^2 the variance proxy."""
    if khat < 1:
        raise ValueError("khat must be >= 1")
    mode = mode or PValueMode("hw")
    t = np.asarray(t, dtype=float)
    excess = t - khat
    s2 = mode.sigma_sg2
    expo = np.minimum(excess ** 2 / (khat ** 2 * s2 ** 2), excess / s2)
    out = np.where(excess > 0, np.exp(-mode.c * np.maximum(expo, 0.0)), 1.0)
    return float(out) if out.ndim == 0 else out


def pvalues(t, khat: int, mode: PValueMode | None = None) -> np.ndarray:
    mode = mode or PValueMode()
    if mode.variant == "chi2":
        return np.asarray(chi2_sf(np.maximum(np.asarray(t, dtype=float), 0.0), khat))
    return np.asarray(hw_pvalue(t, khat, mode))


def hc_scores(sorted_pi, p: int | None = None, denom: str = "quantile") -> np.ndarray:
    """Higher Criticism scores for j = 1..floor(p/2).

    HC(j) = sqrt(p) (j/p - pi_(j)) / sqrt(q (1 - q)) where q is the uniform quantile j/p
    (``denom="quantile"``) or the ordered p-value pi_(j) itself (``denom="pvalue"``).
    p-values are clamped to [1e-300, 1 - 1e-12] before use.
    """
    pi = np.asarray(sorted_pi, dtype=float)
    if p is None:
        p = pi.size
    if pi.size < p // 2:
        raise ValueError("need at least floor(p/2) sorted p-values")
    if np.any(np.diff(pi) < 0):
        raise ValueError("p-values must be sorted ascending")
    if pi.size and (pi[0] < 0 or pi[-1] > 1):
        raise ValueError("p-values must lie in [0, 1]")
    if denom not in ("quantile", "pvalue"):
        raise ValueError(f"unknown HC denominator {denom!r}")
    m = p // 2
    head = np.clip(pi[:m], PI_FLOOR, PI_CEIL)
    q = np.arange(1, m + 1) / p
    d = q if denom == "quantile" else head
    return math.sqrt(p) * (q - head) / np.sqrt(d * (1.0 - d))


def hc_null_threshold(p: int) -> float:
    return math.sqrt(2.0 * math.log(math.log(p)))


@dataclass
class HCTResult:
    order: np.ndarray
    hc: np.ndarray
    max_hc: float
    s_hat: int
    tested_nonempty: bool
    threshold: float
    selected: np.ndarray


def hct_select(pi, strict: bool = False, denom: str = "quantile") -> HCTResult:
    """Higher Criticism thresholding with the no-signal test.

    ``s_hat`` is the 1-based maximiser of HC over j <= p/2 (smallest j on ties). When the
    maximum does not exceed sqrt(2 log log p) nothing is selected. Otherwise covariates with
    clamped p-value <= pi_(s_hat) are kept, or < pi_(s_hat) when ``strict``. ``denom`` is
    passed to :func:`hc_scores`.
    """
    pi = np.asarray(pi, dtype=float)
    p = pi.size
    if p < 4:
        raise ValueError("HC thresholding needs p >= 4")
    if np.any(~np.isfinite(pi)) or np.any((pi < 0) | (pi > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    order = np.argsort(pi, kind="stable")
    hc = hc_scores(pi[order], p, denom)
    s = int(np.argmax(hc))
    max_hc = float(hc[s])
    clamped = np.clip(pi, PI_FLOOR, PI_CEIL)
    threshold = float(clamped[order[s]])
    tested = max_hc > hc_null_threshold(p)
    if not tested:
        selected = np.empty(0, dtype=np.int64)
    elif strict:
        selected = np.flatnonzero(clamped < threshold)
    else:
        selected = np.flatnonzero(clamped <= threshold)
    return HCTResult(order, hc, max_hc, s + 1, bool(tested), threshold, selected)


def fdr(selected, truth) -> float:
    """Fraction of selected indices outside ``truth``; 0 for an empty selection."""
    sel = set(np.asarray(selected, dtype=np.int64).tolist())
    if not sel:
        return 0.0
    false = sel - set(np.asarray(truth, dtype=np.int64).tolist())
    return len(false) / len(sel)
