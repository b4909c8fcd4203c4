"""Monte-Carlo experiment runners and the aggregated result table."""

from __future__ import annotations

import csv
import hashlib
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..downstream import clustering_error, ng_clu, ng_reg, predict
from ..errors import ConvergenceError, EmptySelectionError
from ..netgen import gen_latent, gen_loadings, gen_network, gen_noise
from ..rstats import PValueMode, fdr, hct_select, pvalues
from ..selection import build_basis, marginal_chi2_rank, ngcs, screen, top_ranked
from .config import ExperimentConfig, Scenario

log = logging.getLogger(__name__)

THREADS_ENV = "NGCS_THREADS"
FAILURE_LIMIT = 0.2
COLUMNS = ("scenario", "mu", "method", "metric", "mean", "std", "R")


class ExperimentError(RuntimeError):
    """Too many repetitions of one cell failed."""


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{THREADS_ENV} must be >= 1")
    return value


def rep_seed(master: int, scenario_id: str, rep: int) -> np.random.SeedSequence:
    """Seed for one repetition. ``mu`` is not part of the key, so the grid shares random numbers."""
    digest = hashlib.sha256(f"{master}|{scenario_id}|{rep}".encode()).digest()
    return np.random.SeedSequence(int.from_bytes(digest[:16], "little"))


# ---------------------------------------------------------------------------
# result table
# ---------------------------------------------------------------------------

@dataclass
class ResultRow:
    scenario: str
    mu: float
    method: str
    metric: str
    mean: float
    std: float
    R: int


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)

    def add(self, scenario, mu, method, metric, values) -> None:
        v = np.asarray(values, dtype=float)
        mean = float(v.mean()) if v.size else math.nan
        std = float(v.std(ddof=1)) if v.size > 1 else 0.0
        self.rows.append(ResultRow(scenario, float(mu), method, metric, mean, std, int(v.size)))

    def select(self, scenario=None, method=None, metric=None) -> list:
        return [r for r in self.rows
                if (scenario is None or r.scenario == scenario)
                and (method is None or r.method == method)
                and (metric is None or r.metric == metric)]

    def value(self, scenario, mu, method, metric) -> float:
        for r in self.select(scenario, method, metric):
            if math.isclose(r.mu, mu, rel_tol=1e-12, abs_tol=1e-15):
                return r.mean
        raise KeyError((scenario, mu, method, metric))

    def scenarios(self) -> list:
        return list(dict.fromkeys(r.scenario for r in self.rows))

    def methods(self) -> list:
        return list(dict.fromkeys(r.method for r in self.rows))

    def to_records(self) -> list:
        return [dict(zip(COLUMNS, (r.scenario, r.mu, r.method, r.metric, r.mean, r.std, r.R)))
                for r in self.rows]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            for r in self.rows:
                w.writerow([r.scenario, f"{r.mu:.17g}", r.method, r.metric,
                            f"{r.mean:.17g}", f"{r.std:.17g}", r.R])

    @classmethod
    def read_csv(cls, path) -> "ResultTable":
        table = cls()
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != COLUMNS:
                raise ValueError(f"{path}: line 1: expected header {','.join(COLUMNS)}")
            for lineno, rec in enumerate(reader, start=2):
                if not rec:
                    continue
                if len(rec) != len(COLUMNS):
                    raise ValueError(f"{path}: line {lineno}: expected {len(COLUMNS)} fields")
                try:
                    table.rows.append(ResultRow(rec[0], float(rec[1]), rec[2], rec[3],
                                                float(rec[4]), float(rec[5]), int(rec[6])))
                except ValueError as exc:
                    raise ValueError(f"{path}: line {lineno}: {exc}") from None
        return table


# ---------------------------------------------------------------------------
# one repetition
# ---------------------------------------------------------------------------

class RepData:
    """Shared draws for one repetition; loadings are re-drawn per ``mu`` from the same stream.

    The streams are spawned exactly like :func:`ngcs.netgen.make_two_study`, so for the same
    seed and ``n_total == N`` the data coincide.
    """

    def __init__(self, sc: Scenario, cfg: ExperimentConfig, ss: np.random.SeedSequence,
                 n_total: int):
        self.sc, self.cfg = sc, cfg
        kids = ss.spawn(5)
        self._load_seed = kids[2]
        self.Y, self.labels = gen_latent(sc.network, n_total, np.random.default_rng(kids[0]))
        self.A = gen_network(sc.network, self.Y[:cfg.n], np.random.default_rng(kids[1]))
        self.E = gen_noise(sc.noise, n_total, cfg.p, np.random.default_rng(kids[3]))
        self.r_resp = np.random.default_rng(kids[4])

    def covariates(self, mu: float):
        spec = self.sc.covariates(self.cfg.p, self.cfg.n_signal, mu)
        M, S = gen_loadings(spec, self.sc.network.K, np.random.default_rng(self._load_seed))
        return self.Y @ M + self.E, M, S


def _fdr_rep(cfg: ExperimentConfig, sc: Scenario, rep: int) -> dict:
    data = RepData(sc, cfg, rep_seed(cfg.seed, sc.id, rep), cfg.n)
    K = sc.network.K
    methods = cfg.fdr_methods()
    bases = {"adj": build_basis(data.A, K, "adj")}
    if "NGCS-HCT-L" in methods:
        bases["lap"] = build_basis(data.A, K, "lap")
    hw_mode = PValueMode("hw")
    out = {}
    for mu in sc.mu_grid:
        X, _, S = data.covariates(mu)
        X1 = X[:cfg.n]
        t_adj = screen(X1, bases["adj"])
        pi_adj = pvalues(t_adj, K, PValueMode("chi2"))
        for m in methods:
            if m == "NGCS-HCT-A":
                sel = hct_select(pi_adj, denom=cfg.hc_denom).selected
            elif m == "NGCS-HCT-L":
                pi = pvalues(screen(X1, bases["lap"]), K, PValueMode("chi2"))
                sel = hct_select(pi, denom=cfg.hc_denom).selected
            elif m == "NGCS-50":
                # rank by t rather than pi: p-values of strong signals underflow to ties
                sel = top_ranked(t_adj, cfg.n_signal)
            elif m == "NGCS-HW":
                sel = hct_select(pvalues(t_adj, K, hw_mode), denom=cfg.hc_denom).selected
            else:
                sel = np.sort(marginal_chi2_rank(X1)[:cfg.n_signal])
            out[(mu, m, "fdr")] = fdr(sel, S)
            out[(mu, m, "n_selected")] = float(sel.size)
    return out


def _cluster_rep(cfg: ExperimentConfig, sc: Scenario, rep: int) -> dict:
    data = RepData(sc, cfg, rep_seed(cfg.seed, sc.id, rep), cfg.N)
    K = sc.network.K
    bases = {f: build_basis(data.A, f * K, cfg.basis) for f in cfg.khat_factors}
    mode = PValueMode(cfg.pvalue)
    out = {}
    for mu in sc.mu_grid:
        X, _, S = data.covariates(mu)
        for f, basis in bases.items():
            name = "NG-clu" if f == 1 else f"NG-clu({f}K)"
            sel = ngcs(basis, X[:cfg.n], pvalue_mode=mode, hc_denom=cfg.hc_denom)
            res = ng_clu(None, X[:cfg.n], X, K, basis.khat, seed=rep, selection=sel)
            out[(mu, name, "error")] = clustering_error(res.labels, data.labels, K)
            out[(mu, name, "fdr")] = fdr(res.selected, S)
            out[(mu, name, "fallback")] = float(res.fallback)
    return out


def _regress_rep(cfg: ExperimentConfig, sc: Scenario, rep: int) -> dict:
    data = RepData(sc, cfg, rep_seed(cfg.seed, sc.id, rep), cfg.N + cfg.n_new)
    K = sc.network.K
    n, N = cfg.n, cfg.N
    beta = data.r_resp.standard_normal(K)
    target = data.Y @ beta
    z = target[n:N] + cfg.sigma_delta * data.r_resp.standard_normal(N - n)
    bases = {f: build_basis(data.A, f * K, cfg.basis) for f in cfg.khat_factors}
    mode = PValueMode(cfg.pvalue)
    out = {}
    for mu in sc.mu_grid:
        X, _, S = data.covariates(mu)
        for f, basis in bases.items():
            name = "NG-reg" if f == 1 else f"NG-reg({f}K)"
            sel = ngcs(basis, X[:n], pvalue_mode=mode, hc_denom=cfg.hc_denom)
            try:
                model = ng_reg(None, X[:n], X[n:N], z, basis.khat, selection=sel)
            except EmptySelectionError:
                out[(mu, name, "mse")] = None
                continue
            out[(mu, name, "mse")] = float(np.mean((predict(model, X[:n]) - target[:n]) ** 2))
            if cfg.n_new:
                out[(mu, name, "mse_new")] = float(
                    np.mean((predict(model, X[N:]) - target[N:]) ** 2))
            # in-sample error against the observed responses, reported for comparison only
            out[(mu, name, "mse_z")] = float(np.mean((predict(model, X[n:N]) - z) ** 2))
            out[(mu, name, "fdr")] = fdr(sel.selected, S)
    return out


_REP_FUNCS = {"fdr": _fdr_rep, "cluster": _cluster_rep, "regress": _regress_rep}


def _run_task(args):
    cfg, sc_index, rep = args
    sc = cfg.scenarios[sc_index]
    try:
        return _REP_FUNCS[cfg.kind](cfg, sc, rep)
    except (ConvergenceError, np.linalg.LinAlgError, FloatingPointError) as exc:
        log.warning("scenario %s rep %d failed: %s", sc.id, rep, exc)
        return None


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> ResultTable:
    """Run every (scenario, repetition) and aggregate mean/std per (scenario, mu, method, metric).

    A repetition that raises a numerical error, or a cell value recorded as ``None``, counts as
    a failure. If 20% or more of the repetitions of any cell fail, :class:`ExperimentError` is
    raised. Work is spread over ``threads`` processes (default from ``NGCS_THREADS``); results
    do not depend on the thread count.
    """
    threads = default_threads() if threads is None else int(threads)
    tasks = [(cfg, i, r) for i in range(len(cfg.scenarios)) for r in range(cfg.repetitions)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
    else:
        results = [_run_task(t) for t in tasks]

    table = ResultTable()
    R = cfg.repetitions
    for i, sc in enumerate(cfg.scenarios):
        reps = results[i * R:(i + 1) * R]
        keys = list(dict.fromkeys(k for res in reps if res for k in res))
        whole_failures = sum(res is None for res in reps)
        if not keys and whole_failures:
            raise ExperimentError(f"scenario {sc.id}: every repetition failed")
        for key in keys:
            mu, method, metric = key
            vals = [res[key] for res in reps if res is not None and res.get(key) is not None]
            failed = R - len(vals)
            if failed:
                table.failures[(sc.id, mu, method, metric)] = failed
            if failed >= FAILURE_LIMIT * R:
                raise ExperimentError(
                    f"{sc.id} mu={mu} {method} {metric}: {failed} of {R} repetitions failed")
            table.add(sc.id, mu, method, metric, vals)
    return table


def run_fdr_sweep(cfg: ExperimentConfig, threads: int | None = None) -> ResultTable:
    if cfg.kind != "fdr":
        raise ValueError("config kind must be 'fdr'")
    return run_experiment(cfg, threads)


def run_cluster_experiment(cfg: ExperimentConfig, threads: int | None = None) -> ResultTable:
    if cfg.kind != "cluster":
        raise ValueError("config kind must be 'cluster'")
    return run_experiment(cfg, threads)


def run_regression_experiment(cfg: ExperimentConfig, threads: int | None = None) -> ResultTable:
    if cfg.kind != "regress":
        raise ValueError("config kind must be 'regress'")
    return run_experiment(cfg, threads)
