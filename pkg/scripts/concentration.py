"""Spectral-norm deviation of the trimmed similarity matrix from its expectation.

Prints ||A0 - P||_2 / sqrt(n C(n-2, d-2) alpha) per n at fixed C(n,d) alpha / n.
"""

import argparse
from math import comb

import numpy as np

from hypersbm.experiments import trial_seed
from hypersbm.generators import SbmParams, sample_weighted_sbm
from hypersbm.spectral import default_c_thr, expected_similarity, similarity_matrix, trim


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[60, 120, 240])
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--c", type=float, default=20.0, help="C(n,d) alpha / n")
    ap.add_argument("--p", type=float, default=0.9)
    ap.add_argument("--q", type=float, default=0.1)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("n,mean_ratio,se")
    for n in args.n:
        alpha = args.c * n / comb(n, args.d)
        params = SbmParams(n=n, d=args.d, cluster_sizes=(n // 2, n - n // 2),
                           p=args.p, q=args.q, alpha=alpha)
        pmat, _ = expected_similarity(params)
        scale = np.sqrt(n * comb(n - 2, args.d - 2) * alpha)
        r = []
        for t in range(args.trials):
            h, _ = sample_weighted_sbm(params, trial_seed(args.seed, n, t))
            a0, _ = trim(similarity_matrix(h), default_c_thr(args.d))
            r.append(np.linalg.norm(a0 - pmat, 2) / scale)
        r = np.array(r)
        print(f"{n},{r.mean():.4f},{r.std(ddof=1) / np.sqrt(len(r)):.4f}")


if __name__ == "__main__":
    main()
