"""Experiment configuration documents.

A configuration is a JSON object::

    {
      "kind": "fdr" | "cluster" | "regress",
      "scenarios": [
        {"id": "dcsbm-a",
         "network": {"variant": "DCSBM", "K": 3, "B": [[...]], "theta": "exp", ...},
         "noise": "gaussian" | "wilson_hilferty" | "mixed",
         "loading": "gauss_mix" | "unif_mix", "loading_sd": 0.05, "loading_min": 0.05,
         "mu_grid": [0.1, 0.3, 0.5]}
      ],
      "n": 800, "N": 1000, "p": 1200, "n_signal": 50,
      "khat_factors": [1, 2],          # Khat = factor * K
      "repetitions": 50, "seed": 20240101,
      "pvalue": "chi2" | "hw", "basis": "adj" | "lap",
      "hc_denom": "quantile" | "pvalue",
      "sigma_delta": 0.7071, "n_new": 200,     # regression only
      "methods": [...]                          # fdr only, optional
    }

Network fields are those of :class:`ngcs.netgen.NetworkModelSpec`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..netgen import CovariateModelSpec, NetworkModelSpec

KINDS = ("fdr", "cluster", "regress")
FDR_METHODS = ("NGCS-HCT-A", "NGCS-HCT-L", "NGCS-50", "NGCS-HW", "Chi")


@dataclass
class Scenario:
    id: str
    network: NetworkModelSpec
    noise: str = "gaussian"
    loading: str = "gauss_mix"
    loading_sd: float = 0.05
    loading_min: float = 0.05
    mu_grid: list = field(default_factory=lambda: [0.5])

    def __post_init__(self):
        if isinstance(self.network, dict):
            self.network = NetworkModelSpec(**self.network)
        if not self.mu_grid:
            raise ValueError(f"scenario {self.id}: mu grid is empty")
        self.mu_grid = [float(m) for m in self.mu_grid]
        # validates noise / loading names
        self.covariates(1, 0, 0.0)

    def covariates(self, p: int, n_signal: int, mu: float) -> CovariateModelSpec:
        return CovariateModelSpec(p=p, n_signal=n_signal, loading=self.loading, mu=mu,
                                  loading_sd=self.loading_sd, loading_min=self.loading_min,
                                  noise=self.noise)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["network"] = self.network.to_dict()
        return d


@dataclass
class ExperimentConfig:
    kind: str
    scenarios: list
    n: int = 800
    N: int = 1000
    p: int = 1200
    n_signal: int = 50
    khat_factors: list = field(default_factory=lambda: [1])
    repetitions: int = 50
    seed: int = 20240101
    pvalue: str = "chi2"
    basis: str = "adj"
    hc_denom: str = "quantile"
    sigma_delta: float = math.sqrt(0.5)
    n_new: int = 200
    methods: list | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        self.scenarios = [s if isinstance(s, Scenario) else Scenario(**s) for s in self.scenarios]
        if not self.scenarios:
            raise ValueError("config has no scenarios")
        ids = [s.id for s in self.scenarios]
        if len(set(ids)) != len(ids):
            raise ValueError("scenario ids must be unique")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if not 1 <= self.n <= self.N:
            raise ValueError("need 1 <= n <= N")
        if not 0 <= self.n_signal <= self.p:
            raise ValueError("n_signal must lie in [0, p]")
        if self.pvalue not in ("chi2", "hw"):
            raise ValueError(f"unknown p-value mode {self.pvalue!r}")
        if self.basis not in ("adj", "lap"):
            raise ValueError(f"unknown basis {self.basis!r}")
        if not self.khat_factors or any(int(f) < 1 for f in self.khat_factors):
            raise ValueError("khat_factors must be positive integers")
        self.khat_factors = [int(f) for f in self.khat_factors]
        if self.methods is not None:
            unknown = set(self.methods) - set(FDR_METHODS)
            if unknown:
                raise ValueError(f"unknown methods {sorted(unknown)}")

    def fdr_methods(self) -> list:
        return list(self.methods) if self.methods else list(FDR_METHODS)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scenarios"] = [s.to_dict() for s in self.scenarios]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except TypeError as exc:
            raise ValueError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# presets mirroring the simulation section
# ---------------------------------------------------------------------------

DCSBM_B = [[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]]
NOISE_TAGS = {"a": "gaussian", "b": "wilson_hilferty", "c": "mixed"}


def _network(model: str) -> dict:
    if model == "dcsbm":
        return {"variant": "DCSBM", "K": 3, "B": DCSBM_B, "theta": "exp",
                "theta_rate": 5.0, "theta_shift": 0.06}
    if model == "dcmm":
        return {"variant": "DCMM", "K": 3, "B": DCSBM_B, "theta": "exp",
                "theta_rate": 5.0, "theta_shift": 0.06, "mixture_h": 0.3}
    return {"variant": "RDPG", "K": 10, "rho_n": 0.01, "rdpg_mean": 0.2, "rdpg_blocks": 5}


def preset_scenario(model: str, noise_tag: str, mu_grid, loading_sd: float = 0.05) -> Scenario:
    """Scenario ``<model>-<tag>`` with noise tag a (Gaussian), b (Wilson-Hilferty) or c (mixed)."""
    loading = "unif_mix" if model == "rdpg" else "gauss_mix"
    return Scenario(id=f"{model}-{noise_tag}", network=_network(model),
                    noise=NOISE_TAGS[noise_tag], loading=loading,
                    loading_sd=loading_sd, mu_grid=list(mu_grid))


def preset_config(kind: str, repetitions: int = 50, seed: int = 20240101,
                 loading_sd: float = 0.05) -> ExperimentConfig:
    """Presets for the FDR sweep, the clustering table and the regression table.

    ``loading_sd`` is the spread of the Gaussian loading mixture (DCSBM/DCMM only).
    """
    if kind == "fdr":
        grids = {"dcsbm": [0.1, 0.2, 0.3, 0.4, 0.5], "dcmm": [0.1, 0.2, 0.3, 0.4, 0.5],
                 "rdpg": [0.05, 0.1, 0.15, 0.2, 0.25, 0.3]}
        scen = [preset_scenario(m, t, grids[m], loading_sd) for m in grids for t in "abc"]
        return ExperimentConfig("fdr", scen, n=800, N=800, repetitions=repetitions, seed=seed)
    if kind == "cluster":
        scen = [preset_scenario("dcsbm", t, [0.1, 0.3, 0.5], loading_sd) for t in "abc"]
        return ExperimentConfig("cluster", scen, khat_factors=[1, 2], repetitions=repetitions,
                                seed=seed)
    if kind == "regress":
        scen = [preset_scenario("rdpg", t, [0.5, 1.0, 2.0]) for t in "abc"]
        return ExperimentConfig("regress", scen, khat_factors=[1, 2], repetitions=repetitions,
                                seed=seed)
    raise ValueError(f"unknown experiment kind {kind!r}")
