"""Network-guided covariate selection with two-study clustering and regression."""

from .downstream import (ClusterOutput, RegressionOutput, clustering_error, ng_clu, ng_reg,
                         predict)
from .errors import ConvergenceError, EmptySelectionError
from .linalg import SparseSymGraph, kmeans, top_k_eigen, truncated_svd
from .netgen import (CovariateModelSpec, NetworkModelSpec, TwoStudyBundle, gen_covariates,
                     gen_network, make_two_study)
from .rstats import PValueMode, chi2_sf, fdr, hc_scores, hct_select
from .selection import SelectionResult, SpectralBasis, build_basis, ngcs, screen

__version__ = "0.1.0"

__all__ = ["ClusterOutput", "RegressionOutput", "clustering_error", "ng_clu", "ng_reg",
           "predict", "ConvergenceError", "EmptySelectionError", "SparseSymGraph", "kmeans",
           "top_k_eigen", "truncated_svd", "CovariateModelSpec", "NetworkModelSpec",
           "TwoStudyBundle", "gen_covariates", "gen_network", "make_two_study", "PValueMode",
           "chi2_sf", "fdr", "hc_scores", "hct_select", "SelectionResult", "SpectralBasis",
           "build_basis", "ngcs", "screen"]
