"""Pilot run for the sketched subspace benchmark; writes the acceptance bound fixture.

The pilot uses a base seed disjoint from the acceptance run. The bound is the
pilot mean plus three standard errors of a difference of two 20-trial means,
so an acceptance run from the same distribution passes with high probability.
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np

from hypersbm.experiments import ExperimentConfig, run_sweep

PARAMS = dict(k=3, m=3, ell=50, points_per_cluster=100, sigma=0.05, d=5)
FIXTURE = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "subspace_pilot.json"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default=str(FIXTURE))
    args = ap.parse_args()

    cfg = ExperimentConfig(model="subspace", algorithm="hsclr", params=PARAMS,
                           trials=args.trials, seed=args.seed)
    t0 = time.perf_counter()
    reports = run_sweep(cfg, jobs=args.jobs)
    errs = np.array([r.error_fraction for r in reports])
    if np.isnan(errs).any():
        raise SystemExit("pilot had failed trials: " + "; ".join(r.error for r in reports if r.error))
    mean = float(errs.mean())
    se = float(errs.std(ddof=1) / np.sqrt(len(errs)))
    bound = mean + 3 * np.sqrt(2) * se
    out = {"params": PARAMS, "algorithm": "hsclr", "pilot_seed": args.seed,
           "trials": args.trials, "errors": errs.tolist(), "mean": mean, "se": se,
           "bound": float(bound), "seconds": round(time.perf_counter() - t0, 1)}
    Path(args.out).write_text(json.dumps(out, indent=2) + "\n")
    print(f"mean={mean:.4f} se={se:.4f} bound={bound:.4f} -> {args.out}")


if __name__ == "__main__":
    main()
