"""Behaviour of the screening statistics and the HC test without any signal.

Reports the KS distance of oracle-basis statistics to chi2_K, and how often the
no-signal test keeps the selection empty for each p-value mode and HC denominator.

    python3 scripts/null_calibration.py [--seeds 50] [--p 1200]
"""

import argparse

import numpy as np
from scipy.stats import kstest, chi2

from ngcs import NetworkModelSpec, build_basis, gen_network
from ngcs.netgen import gen_latent, gen_noise
from ngcs.rstats import PValueMode, hct_select, pvalues
from ngcs.selection import screen


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--p", type=int, default=1200)
    ap.add_argument("--n", type=int, default=800)
    args = ap.parse_args()
    net = NetworkModelSpec("DCSBM", 3)
    empty = {}
    ks = []
    for seed in range(args.seeds):
        rng = np.random.default_rng(seed)
        Y, _ = gen_latent(net, args.n, rng)
        A = gen_network(net, Y, rng)
        X = gen_noise("gaussian", args.n, args.p, rng)
        t_or = screen(X, build_basis(Y, 3, "oracle"))
        ks.append(kstest(t_or, chi2(3).cdf).statistic)
        t = screen(X, build_basis(A, 3, "adj"))
        for mode in ("chi2", "hw"):
            pi = pvalues(t, 3, PValueMode(mode))
            for denom in ("quantile", "pvalue"):
                key = (mode, denom)
                empty[key] = empty.get(key, 0) + (hct_select(pi, denom=denom).selected.size == 0)
    print(f"oracle basis KS distance to chi2_3: mean {np.mean(ks):.4f}, max {np.max(ks):.4f}")
    for (mode, denom), count in sorted(empty.items()):
        print(f"pvalue={mode:4s} hc_denom={denom:8s} empty in {count}/{args.seeds} seeds")


if __name__ == "__main__":
    main()
