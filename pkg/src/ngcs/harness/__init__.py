"""Simulation harness: configs, experiment runners, file I/O, plots and the CLI."""

from .config import ExperimentConfig, Scenario, preset_config
from .experiments import (ExperimentError, ResultTable, rep_seed, run_cluster_experiment,
                          run_experiment, run_fdr_sweep, run_regression_experiment)
from .io import InputError, load_graph, load_matrix, save_matrix, save_results
from .plot import emit_plot

__all__ = ["ExperimentConfig", "Scenario", "preset_config", "ExperimentError", "ResultTable",
           "rep_seed", "run_cluster_experiment", "run_experiment", "run_fdr_sweep",
           "run_regression_experiment", "InputError", "load_graph", "load_matrix", "save_matrix",
           "save_results", "emit_plot"]
