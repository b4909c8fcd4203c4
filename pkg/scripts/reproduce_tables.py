"""Clustering and regression tables (50 repetitions) next to the reference values.

    python3 scripts/reproduce_tables.py [--reps 50] [--out results/tables]
"""

import argparse
import time
from pathlib import Path

from ngcs.harness import preset_config, run_experiment, save_results
from ngcs.harness.plot import emit_plot

REFERENCE = {
    ("cluster", "NG-clu"): {"a": (0.2656, 0.0662, 0.0058), "b": (None, 0.0834, None)},
    ("cluster", "NG-clu(2K)"): {"a": (0.3138, 0.0654, 0.0070)},
    ("regress", "NG-reg"): {"a": (0.8205, 0.6027, 0.5376), "c": (1.0160, None, None)},
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--out", default="results/tables")
    ap.add_argument("--threads", type=int)
    ap.add_argument("--loading-sd", type=float, default=0.05,
                    help="spread of the Gaussian loading mixture")
    args = ap.parse_args()
    for kind, metric in (("cluster", "error"), ("regress", "mse")):
        cfg = preset_config(kind, repetitions=args.reps, loading_sd=args.loading_sd)
        t0 = time.perf_counter()
        table = run_experiment(cfg, threads=args.threads)
        elapsed = time.perf_counter() - t0
        out = Path(args.out) / kind
        save_results(table, cfg, out)
        emit_plot("error_vs_mu", table, out / "figure.svg", metric)
        print(f"== {kind}: {args.reps} reps in {elapsed:.1f} s")
        for sc in table.scenarios():
            tag = sc.split("-")[1]
            for method in table.methods():
                rows = sorted(table.select(sc, method, metric), key=lambda r: r.mu)
                ref = REFERENCE.get((kind, method), {}).get(tag)
                cells = []
                for k, r in enumerate(rows):
                    pub = f" [{ref[k]:.4f}]" if ref and ref[k] is not None else ""
                    cells.append(f"mu={r.mu:g}: {r.mean:.4f} (sd {r.std:.4f}){pub}")
                print(f"{sc:8s} {method:11s} " + "  ".join(cells))


if __name__ == "__main__":
    main()
