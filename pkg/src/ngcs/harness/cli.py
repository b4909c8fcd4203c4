"""Command line interface: ``ngcs {select,cluster,regress,simulate,plot}``.

Exit status is 0 on success, 2 for bad input (missing or malformed files, invalid options)
and 3 for numerical failures (non-converged eigensolver, empty selection in ``regress``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..downstream import ng_clu, ng_reg, predict
from ..errors import ConvergenceError, EmptySelectionError
from ..rstats import PValueMode
from ..selection import build_basis, ngcs
from .config import ExperimentConfig
from .experiments import ExperimentError, run_experiment
from .io import load_graph, load_matrix, load_vector, save_matrix, save_results
from .plot import KINDS as PLOT_KINDS
from .plot import emit_plot, write_hc_curve

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
PLOT_FOR_KIND = {"fdr": ("fdr_vs_mu", "fdr"), "cluster": ("error_vs_mu", "error"),
                 "regress": ("error_vs_mu", "mse")}


def _add_selection_args(p):
    p.add_argument("--graph", required=True, help="Matrix Market (.mtx) or edge-list CSV")
    p.add_argument("--covariates", required=True, help="Study-1 covariates, n x p CSV")
    p.add_argument("--khat", type=int, required=True)
    p.add_argument("--pvalue", choices=("chi2", "hw"), default="chi2")
    p.add_argument("--basis", choices=("adj", "lap", "dsvd"), default="adj")
    p.add_argument("--standardize", action="store_true", help="z-score covariate columns first")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    # argparse exits with status 2 on usage errors, matching EXIT_INPUT
    ap = argparse.ArgumentParser(prog="ngcs", description="Network-guided covariate selection")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="select covariates on files")
    _add_selection_args(p)
    p.add_argument("--out", help="per-covariate CSV: index, t, pvalue, selected")
    p.add_argument("--hc-out", help="write the HC curve as a j,hc CSV")

    p = sub.add_parser("cluster", help="NG-clu on a two-study data set")
    _add_selection_args(p)
    p.add_argument("--covariates2", help="Study-2 covariates (no network), m x p CSV")
    p.add_argument("--K", type=int, required=True, help="number of clusters")
    p.add_argument("--n-init", type=int, default=10)
    p.add_argument("--out", help="labels CSV, one row per subject")

    p = sub.add_parser("regress", help="NG-reg on a two-study data set")
    _add_selection_args(p)
    p.add_argument("--covariates2", required=True, help="Study-2 covariates, m x p CSV")
    p.add_argument("--response", required=True, help="Study-2 response, one value per row")
    p.add_argument("--predict", help="covariates of subjects to predict, CSV")
    p.add_argument("--out", help="predictions CSV (Study-1 subjects, or --predict rows)")

    p = sub.add_parser("simulate", help="run a Monte-Carlo experiment from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--reps", type=int, help="override the number of repetitions")
    p.add_argument("--threads", type=int, help="worker processes (default $NGCS_THREADS or 1)")
    p.add_argument("--no-plot", action="store_true")

    p = sub.add_parser("plot", help="render a result table as SVG")
    p.add_argument("--kind", required=True, choices=PLOT_KINDS)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--metric")
    return ap


def _graph_and_x(args):
    graph = load_graph(args.graph, directed=getattr(args, "basis", "adj") == "dsvd")
    X1 = load_matrix(args.covariates)
    n = graph.shape[0] if hasattr(graph, "shape") else graph.n
    if X1.shape[0] != n:
        raise ValueError(f"covariates have {X1.shape[0]} rows but the graph has {n} nodes")
    if not 1 <= args.khat <= n:
        raise ValueError(f"--khat must lie in [1, {n}]")
    return graph, X1


def _selection(args, graph, X1):
    basis = build_basis(graph, args.khat, args.basis, seed=args.seed)
    return ngcs(basis, X1, pvalue_mode=PValueMode(args.pvalue), standardize=args.standardize)


def cmd_select(args) -> int:
    graph, X1 = _graph_and_x(args)
    sel = _selection(args, graph, X1)
    if args.out:
        flag = np.zeros(X1.shape[1], dtype=int)
        flag[sel.selected] = 1
        with open(args.out, "w") as fh:
            fh.write("index,t,pvalue,selected\n")
            for j in range(X1.shape[1]):
                fh.write(f"{j},{sel.t[j]:.17g},{sel.pi[j]:.17g},{flag[j]}\n")
    if args.hc_out:
        write_hc_curve(args.hc_out, sel.hc)
    summary = {"selected": sel.selected.tolist(), "size": sel.size, "max_hc": sel.max_hc,
               "tested_nonempty": sel.tested_nonempty, "threshold": sel.threshold,
               "khat": sel.khat, "basis": sel.source}
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_cluster(args) -> int:
    graph, X1 = _graph_and_x(args)
    Xt = X1
    if args.covariates2:
        X2 = load_matrix(args.covariates2)
        if X2.shape[1] != X1.shape[1]:
            raise ValueError("both studies must have the same number of covariates")
        Xt = np.vstack([X1, X2])
    sel = _selection(args, graph, X1)
    res = ng_clu(None, X1, Xt, args.K, args.khat, seed=args.seed, selection=sel,
                 n_init=args.n_init)
    if args.out:
        np.savetxt(args.out, res.labels[:, None], fmt="%d")
    print(json.dumps({"labels": res.labels.tolist(), "selected": res.selected.tolist(),
                      "fallback": res.fallback, "khat": res.khat}, sort_keys=True))
    return EXIT_OK


def cmd_regress(args) -> int:
    graph, X1 = _graph_and_x(args)
    X2 = load_matrix(args.covariates2)
    z = load_vector(args.response)
    sel = _selection(args, graph, X1)
    model = ng_reg(None, X1, X2, z, args.khat, selection=sel)
    Xp = load_matrix(args.predict) if args.predict else X1
    pred = predict(model, Xp)
    if args.out:
        save_matrix(args.out, pred[:, None])
    print(json.dumps({"selected": model.selected.tolist(),
                      "gamma": [float(g) for g in model.gamma_hat],
                      "predictions": [float(v) for v in pred]}, sort_keys=True))
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.reps is not None:
        if args.reps < 1:
            raise ValueError("--reps must be >= 1")
        cfg.repetitions = args.reps
    if args.threads is not None and args.threads < 1:
        raise ValueError("--threads must be >= 1")
    table = run_experiment(cfg, threads=args.threads)
    csv_path, json_path = save_results(table, cfg, args.out)
    paths = [str(csv_path), str(json_path)]
    if not args.no_plot:
        kind, metric = PLOT_FOR_KIND[cfg.kind]
        svg = Path(args.out) / "figure.svg"
        emit_plot(kind, table, svg, metric)
        paths.append(str(svg))
    print("\n".join(paths))
    return EXIT_OK


def cmd_plot(args) -> int:
    emit_plot(args.kind, args.inp, args.out, args.metric)
    print(args.out)
    return EXIT_OK


COMMANDS = {"select": cmd_select, "cluster": cmd_cluster, "regress": cmd_regress,
            "simulate": cmd_simulate, "plot": cmd_plot}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConvergenceError, EmptySelectionError, ExperimentError, np.linalg.LinAlgError,
            FloatingPointError) as exc:
        print(f"ngcs: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"ngcs: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
