"""Generative models: latent factors, DCSBM/DCMM/RDPG networks, covariates, responses."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, asdict
from typing import Literal

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln

from .linalg import SparseSymGraph

log = logging.getLogger(__name__)

NOISE_FAMILIES = ("gaussian", "wilson_hilferty", "mixed")
LOADINGS = ("gauss_mix", "unif_mix")


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


@dataclass
class NetworkModelSpec:
    """Network model. ``B`` is used by DCSBM/DCMM, ``rho_n`` and the RDPG fields by RDPG.

    ``theta`` selects the degree sampler: ``"exp"`` draws Exp(rate) + shift,
    ``"absnormal"`` draws |N(loc, scale)|, ``"const"`` sets every theta to ``theta_value``.
    """

    variant: Literal["DCSBM", "DCMM", "RDPG"] = "DCSBM"
    K: int = 3
    B: list | None = None
    theta: Literal["exp", "absnormal", "const"] = "exp"
    theta_rate: float = 5.0
    theta_shift: float = 0.06
    theta_loc: float = 0.1
    theta_scale: float = 0.2
    theta_value: float = 1.0
    mixture_h: float = 0.3
    rho_n: float = 0.01
    rdpg_mean: float = 0.2
    rdpg_blocks: int = 5

    def __post_init__(self):
        if self.variant not in ("DCSBM", "DCMM", "RDPG"):
            raise ValueError(f"unknown network variant {self.variant!r}")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.variant != "RDPG":
            if self.B is None:
                self.B = (0.25 * np.ones((self.K, self.K)) + 0.25 * np.eye(self.K)).tolist()
            B = np.asarray(self.B, dtype=float)
            if B.shape != (self.K, self.K) or not np.allclose(B, B.T):
                raise ValueError("B must be a symmetric K x K matrix")
            self.B = B.tolist()
        if self.theta not in ("exp", "absnormal", "const"):
            raise ValueError(f"unknown theta sampler {self.theta!r}")
        if not 0 <= self.rho_n <= 1:
            raise ValueError("rho_n must lie in [0, 1]")
        if self.mixture_h < 0:
            raise ValueError("mixture_h must be >= 0")
        if self.variant == "RDPG" and not 1 <= self.rdpg_blocks <= self.K:
            raise ValueError("rdpg_blocks must lie in [1, K]")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CovariateModelSpec:
    """Covariate model X = Y M + E.

    The informative set is ``S`` when given, else ``n_signal`` indices drawn at random, else
    ``round(p ** (1 - sparsity_beta))`` indices.
    """

    p: int = 1200
    n_signal: int | None = 50
    S: list | None = None
    sparsity_beta: float | None = None
    loading: Literal["gauss_mix", "unif_mix"] = "gauss_mix"
    mu: float = 0.5
    loading_sd: float = 0.05
    loading_min: float = 0.05
    noise: Literal["gaussian", "wilson_hilferty", "mixed"] = "gaussian"

    def __post_init__(self):
        if self.noise not in NOISE_FAMILIES:
            raise ValueError(f"unknown noise family {self.noise!r}")
        if self.loading not in LOADINGS:
            raise ValueError(f"unknown loading sampler {self.loading!r}")
        if self.p < 1:
            raise ValueError("p must be >= 1")

    def signal_size(self) -> int:
        if self.S is not None:
            return len(self.S)
        if self.n_signal is not None:
            return int(self.n_signal)
        if self.sparsity_beta is not None:
            return int(round(self.p ** (1.0 - self.sparsity_beta)))
        return 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TwoStudyBundle:
    """Study 1 (network + covariates) and Study 2 (covariates, optional responses)."""

    A: SparseSymGraph
    X1: np.ndarray
    X2: np.ndarray
    Y: np.ndarray
    M: np.ndarray
    S: np.ndarray
    labels: np.ndarray | None = None
    z: np.ndarray | None = None
    beta_coef: np.ndarray | None = None
    sigma_delta: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.X1.shape[0]

    @property
    def N(self) -> int:
        return self.X1.shape[0] + self.X2.shape[0]

    @property
    def Xtilde(self) -> np.ndarray:
        return np.vstack([self.X1, self.X2])

    @property
    def Y1(self) -> np.ndarray:
        return self.Y[: self.n]

    @property
    def Y2(self) -> np.ndarray:
        return self.Y[self.n:]


# ---------------------------------------------------------------------------
# latent factors and networks
# ---------------------------------------------------------------------------

def rdpg_covariance(K: int, blocks: int, rng: np.random.Generator) -> np.ndarray:
    """Block-diagonal covariance: unit diagonal, one Unif(0,1) correlation per block."""
    sizes = np.full(blocks, K // blocks)
    sizes[: K % blocks] += 1
    Sigma = np.zeros((K, K))
    start = 0
    for size in sizes:
        r = rng.uniform(0.0, 1.0)
        block = np.full((size, size), r)
        np.fill_diagonal(block, 1.0)
        Sigma[start:start + size, start:start + size] = block
        start += size
    return Sigma


def gen_latent(spec: NetworkModelSpec, n: int, seed=None):
    """Latent rows ``Y`` (n x K) and class labels (``None`` for RDPG)."""
    if n < spec.K:
        raise ValueError("need n >= K")
    rng = _rng(seed)
    K = spec.K
    if spec.variant == "RDPG":
        Sigma = rdpg_covariance(K, spec.rdpg_blocks, rng)
        Y = rng.multivariate_normal(np.full(K, spec.rdpg_mean), Sigma, size=n, method="cholesky")
        return Y, None
    labels = rng.integers(K, size=n)
    Y = np.zeros((n, K))
    Y[np.arange(n), labels] = 1.0
    if spec.variant == "DCMM" and spec.mixture_h > 0:
        Y += rng.uniform(0.0, spec.mixture_h, size=(n, K))
        Y /= Y.sum(axis=1, keepdims=True)
    return Y, labels


def gen_theta(spec: NetworkModelSpec, n: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    if spec.theta == "exp":
        return rng.exponential(1.0 / spec.theta_rate, size=n) + spec.theta_shift
    if spec.theta == "absnormal":
        return np.abs(rng.normal(spec.theta_loc, spec.theta_scale, size=n))
    return np.full(n, float(spec.theta_value))


def link_block(spec: NetworkModelSpec, Y: np.ndarray, theta: np.ndarray | None, rows: slice):
    """Unclamped link probabilities g(y_i, y_j) for ``i`` in ``rows`` and all ``j``."""
    if spec.variant == "RDPG":
        return spec.rho_n * (Y[rows] @ Y.T)
    B = np.asarray(spec.B)
    return (theta[rows, None] * theta[None, :]) * (Y[rows] @ B @ Y.T)


def gen_network(spec: NetworkModelSpec, Y, seed=None, theta=None, chunk: int = 512) -> SparseSymGraph:
    """Independent Bernoulli edges for i < j with probability clamp(g(y_i, y_j), 0, 1).

    DCSBM/DCMM draw ``theta`` from the configured sampler unless it is passed in. The number of
    pairs whose probability had to be clamped is logged.
    """
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[0]
    if Y.ndim != 2 or Y.shape[1] != spec.K:
        raise ValueError(f"Y must be n x {spec.K}")
    rng = _rng(seed)
    if spec.variant != "RDPG":
        theta = gen_theta(spec, n, rng) if theta is None else np.asarray(theta, dtype=float)
        if theta.shape != (n,) or np.any(theta <= 0):
            raise ValueError("theta must hold n positive values")
    rows_out, cols_out = [], []
    clamped = 0
    for i0 in range(0, n, chunk):
        i1 = min(n, i0 + chunk)
        P = link_block(spec, Y, theta, slice(i0, i1))
        ii, jj = np.triu_indices(i1 - i0, k=1, m=n - i0)
        probs = P[ii, jj + i0]
        clamped += int(np.count_nonzero((probs < 0) | (probs > 1)))
        hit = rng.random(probs.size) < np.clip(probs, 0.0, 1.0)
        rows_out.append(ii[hit] + i0)
        cols_out.append(jj[hit] + i0)
    if clamped:
        log.info("gen_network: %d link probabilities clamped to [0, 1]", clamped)
    rows = np.concatenate(rows_out) if rows_out else np.empty(0, dtype=np.int64)
    cols = np.concatenate(cols_out) if cols_out else np.empty(0, dtype=np.int64)
    return SparseSymGraph(n, rows, cols)


def laplacian(A: SparseSymGraph) -> sp.csr_matrix:
    """D^{-1/2} A D^{-1/2}; rows and columns of isolated nodes are zero."""
    d = A.degree.astype(float)
    inv = np.zeros_like(d)
    inv[d > 0] = 1.0 / np.sqrt(d[d > 0])
    Dm = sp.diags(inv)
    return (Dm @ A.csr @ Dm).tocsr()


# ---------------------------------------------------------------------------
# covariates
# ---------------------------------------------------------------------------

def _wh_moments(k: int = 5):
    """Exact mean and variance of (chi2_k / k)^(1/3)."""
    def raw(r):
        return math.exp(r * math.log(2.0 / k) + gammaln(k / 2 + r) - gammaln(k / 2))
    m1 = raw(1.0 / 3.0)
    return m1, raw(2.0 / 3.0) - m1 ** 2


_WH_MEAN, _WH_VAR = _wh_moments(5)

MIXED_COMPONENTS = ("rademacher", "uniform", "bernoulli", "three_point")


def gen_noise(family: str, n: int, p: int, seed=None) -> np.ndarray:
    """Mean-zero, unit-variance noise matrix (n x p).

    ``wilson_hilferty`` applies the cube-root transform to chi2_5 draws and standardises with
    the exact moments of (chi2_5/5)^(1/3). ``mixed`` draws one of four distributions per column.
    """
    rng = _rng(seed)
    if family == "gaussian":
        return rng.standard_normal((n, p))
    if family == "wilson_hilferty":
        cube = np.cbrt(rng.chisquare(5, size=(n, p)) / 5.0)
        return (cube - _WH_MEAN) / math.sqrt(_WH_VAR)
    if family == "mixed":
        kind = rng.integers(len(MIXED_COMPONENTS), size=p)
        U = rng.random((n, p))
        E = np.empty((n, p))
        for c, name in enumerate(MIXED_COMPONENTS):
            cols = kind == c
            u = U[:, cols]
            if name == "rademacher" or name == "bernoulli":
                # centred and scaled Bernoulli(0.5) coincides with Rademacher(-1, 1)
                E[:, cols] = np.where(u < 0.5, -1.0, 1.0)
            elif name == "uniform":
                E[:, cols] = math.sqrt(3.0) * (2.0 * u - 1.0)
            else:
                E[:, cols] = np.where(u < 0.02, -5.0, np.where(u < 0.04, 5.0, 0.0))
        return E
    raise ValueError(f"unknown noise family {family!r}")


def gen_loadings(spec: CovariateModelSpec, K: int, seed=None):
    """Loading matrix M (K x p) and the sorted informative index set S."""
    rng = _rng(seed)
    p = spec.p
    if spec.S is not None:
        S = np.unique(np.asarray(spec.S, dtype=np.int64))
        if S.size and (S[0] < 0 or S[-1] >= p):
            raise ValueError("S indices out of range")
    else:
        s = spec.signal_size()
        if not 0 <= s <= p:
            raise ValueError("signal size must lie in [0, p]")
        S = np.sort(rng.choice(p, size=s, replace=False)).astype(np.int64)
    sign = np.where(rng.random((K, S.size)) < 0.5, 1.0, -1.0)
    if spec.loading == "gauss_mix":
        mag = spec.mu + spec.loading_sd * rng.standard_normal((K, S.size))
    else:
        lo = spec.loading_min
        mag = lo + (spec.mu - lo) * rng.random((K, S.size))
    M = np.zeros((K, p))
    M[:, S] = sign * mag
    return M, S


def gen_covariates(spec: CovariateModelSpec, Y, seed=None, M=None):
    """X = Y M + E. Returns ``(X, M, S)``; pass ``M`` to reuse loadings across studies."""
    Y = np.asarray(Y, dtype=float)
    rng = _rng(seed)
    if M is None:
        M, S = gen_loadings(spec, Y.shape[1], rng)
    else:
        M = np.asarray(M, dtype=float)
        if M.shape != (Y.shape[1], spec.p):
            raise ValueError("M must be K x p")
        S = np.flatnonzero(np.any(M != 0, axis=0))
    E = gen_noise(spec.noise, Y.shape[0], spec.p, rng)
    return Y @ M + E, M, S


def gen_response(Y2, beta_coef, sigma_delta: float, seed=None) -> np.ndarray:
    """z = Y2 beta + delta with delta ~ N(0, sigma_delta^2)."""
    Y2 = np.asarray(Y2, dtype=float)
    beta_coef = np.asarray(beta_coef, dtype=float)
    if beta_coef.shape != (Y2.shape[1],):
        raise ValueError("beta_coef length must equal K")
    if sigma_delta < 0:
        raise ValueError("sigma_delta must be >= 0")
    rng = _rng(seed)
    return Y2 @ beta_coef + sigma_delta * rng.standard_normal(Y2.shape[0])


def gen_logitnormal_noise(n: int, p_noise: int, mu_range=(-3.5, -3.3), sigma_range=(1.5, 2.2),
                          seed=None) -> np.ndarray:
    """Columns logistic(mu_j + sigma_j Z) with mu_j, sigma_j uniform on the given ranges."""
    if mu_range[0] > mu_range[1] or sigma_range[0] > sigma_range[1] or sigma_range[0] < 0:
        raise ValueError("invalid parameter ranges")
    rng = _rng(seed)
    mu = rng.uniform(*mu_range, size=p_noise)
    sigma = rng.uniform(*sigma_range, size=p_noise)
    return 1.0 / (1.0 + np.exp(-(mu + sigma * rng.standard_normal((n, p_noise)))))


def make_two_study(net: NetworkModelSpec, cov: CovariateModelSpec, n: int, N: int, seed=None,
                   response: bool = False, sigma_delta: float = 0.0, beta_coef=None) -> TwoStudyBundle:
    """Draw one two-study data set; the first ``n`` subjects form Study 1.

    Random streams are consumed in a fixed order (latent, network, loadings, noise, response)
    from independent child generators, so changing e.g. ``mu`` leaves the network unchanged.
    """
    if not 1 <= n <= N:
        raise ValueError("need 1 <= n <= N")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    r_lat, r_net, r_load, r_noise, r_resp = (np.random.default_rng(s) for s in ss.spawn(5))
    Y, labels = gen_latent(net, N, r_lat)
    A = gen_network(net, Y[:n], r_net)
    M, S = gen_loadings(cov, net.K, r_load)
    X, _, _ = gen_covariates(cov, Y, r_noise, M=M)
    z = None
    if response:
        if beta_coef is None:
            beta_coef = r_resp.standard_normal(net.K)
        z = gen_response(Y[n:], beta_coef, sigma_delta, r_resp)
    return TwoStudyBundle(A=A, X1=X[:n], X2=X[n:], Y=Y, M=M, S=S, labels=labels, z=z,
                          beta_coef=None if beta_coef is None else np.asarray(beta_coef),
                          sigma_delta=sigma_delta)
