"""FDR against signal strength for the nine network/noise scenarios.

    python3 scripts/fdr_sweep.py [--reps 50] [--out results/fdr]
"""

import argparse
import time
from pathlib import Path

from scipy.stats import spearmanr

from ngcs.harness import preset_config, run_experiment, save_results
from ngcs.harness.plot import emit_plot


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--out", default="results/fdr")
    ap.add_argument("--threads", type=int)
    ap.add_argument("--loading-sd", type=float, default=0.05,
                    help="spread of the Gaussian loading mixture")
    args = ap.parse_args()
    cfg = preset_config("fdr", repetitions=args.reps, loading_sd=args.loading_sd)
    t0 = time.perf_counter()
    table = run_experiment(cfg, threads=args.threads)
    print(f"{args.reps} reps in {time.perf_counter() - t0:.1f} s")
    out = Path(args.out)
    save_results(table, cfg, out)
    emit_plot("fdr_vs_mu", table, out / "figure.svg")
    for sc in table.scenarios():
        for method in table.methods():
            rows = sorted(table.select(sc, method, "fdr"), key=lambda r: r.mu)
            mus, vals = [r.mu for r in rows], [r.mean for r in rows]
            rho = spearmanr(mus, vals).statistic if len(set(vals)) > 1 else float("nan")
            print(f"{sc:8s} {method:11s} " + " ".join(f"{v:.3f}" for v in vals)
                  + f"  spearman={rho:.2f}")


if __name__ == "__main__":
    main()
