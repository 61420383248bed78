"""Monte-Carlo experiment harness: configs, per-trial runs, sweeps and CSV output.

A sweep is a grid over model/algorithm parameters times a number of trials.
Trial seeds depend only on (base seed, grid index, trial index), so results
are identical whatever the worker count.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import itertools
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from math import comb, log
from typing import Iterable, Iterator

import numpy as np
from scipy.stats import binomtest

from . import __version__
from .errors import HypersbmError, InvalidParams
from .generators import (
    CbmParams,
    SbmParams,
    SubspaceParams,
    balanced_partition,
    cbm_information_limit,
    sample_censored_bm,
    sample_planted_clique,
    sample_subspace_points,
    sample_weighted_sbm,
    sketch_hypergraph,
)
from .metrics import error_fraction, worst_cluster_error
from .pipeline import HscConfig, HsclrConfig, hsc, hsclr, hsclr_ml

MODELS = ("sbm", "cbm", "clique", "subspace")
ALGORITHMS = ("hsc", "hsclr", "hsclr-ml")
STAGES = ("sample", "build", "eigen", "kmeans", "refine")

# keys understood in the [model] and [algorithm] sections
MODEL_KEYS = {
    "sbm": {"n", "d", "k", "sizes", "p", "q", "group_p", "alpha", "c_nlogn", "c_n",
            "threshold", "weight_kind", "assortative"},
    "cbm": {"n", "d", "theta", "alpha", "c_nlogn", "c_n", "limit"},
    "clique": {"n", "d", "s"},
    "subspace": {"k", "m", "ell", "points_per_cluster", "sigma", "d", "s_n", "budget",
                 "affine", "tau"},
}
ALGORITHM_KEYS = {"c_thr", "restarts", "eigen_mode", "beta", "epsilon"}
ALPHA_KEYS = {"alpha", "c_nlogn", "c_n", "threshold", "limit"}


def coerce(text):
    """Parse a config value: bool, int, float, a whitespace-separated tuple, or str."""
    if not isinstance(text, str):
        return text
    s = text.strip()
    parts = s.split()
    if len(parts) > 1:
        return tuple(coerce(p) for p in parts)
    low = s.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", ""):
        return None
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    return s


@dataclass
class ExperimentConfig:
    model: str
    algorithm: str = "hsclr"
    params: dict = field(default_factory=dict)      # model parameters
    algo: dict = field(default_factory=dict)        # algorithm overrides
    sweep: dict = field(default_factory=dict)       # axis -> list of values
    trials: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODELS:
            raise InvalidParams(f"model must be one of {MODELS}")
        if self.algorithm not in ALGORITHMS:
            raise InvalidParams(f"algorithm must be one of {ALGORITHMS}")
        if self.algorithm == "hsclr-ml" and self.model != "cbm":
            raise InvalidParams("hsclr-ml applies to the censored block model only")
        if self.trials < 1:
            raise InvalidParams("trials must be >= 1")
        keys = MODEL_KEYS[self.model]
        for name in self.params:
            if name not in keys:
                raise InvalidParams(f"unknown {self.model} parameter {name!r}")
        for name in self.algo:
            if name not in ALGORITHM_KEYS:
                raise InvalidParams(f"unknown algorithm parameter {name!r}")
        for name, values in self.sweep.items():
            if name not in keys and name not in ALGORITHM_KEYS:
                raise InvalidParams(f"sweep axis {name!r} is not a parameter")
            if not values:
                raise InvalidParams(f"sweep axis {name!r} has no values")
        # resolve every grid point now so bad values fail before any trial runs
        for point in self.grid():
            resolve(self, point)

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise InvalidParams(f"bad config: {exc}") from exc
        if not cp.has_section("experiment"):
            raise InvalidParams("config needs an [experiment] section")
        ex = {k: coerce(v) for k, v in cp["experiment"].items()}
        unknown = set(ex) - {"model", "algorithm", "trials", "seed"}
        if unknown:
            raise InvalidParams(f"unknown [experiment] keys {sorted(unknown)}")
        sect = lambda name: {k: coerce(v) for k, v in cp[name].items()} if cp.has_section(name) else {}
        sweep = {}
        for k, v in (cp["sweep"].items() if cp.has_section("sweep") else []):
            sweep[k] = [coerce(x) for x in v.split(",")]
        return cls(model=ex.get("model"), algorithm=ex.get("algorithm", "hsclr"),
                   params=sect("model"), algo=sect("algorithm"), sweep=sweep,
                   trials=int(ex.get("trials", 1)), seed=int(ex.get("seed", 0)))

    def to_ini(self) -> str:
        fmt = lambda v: " ".join(map(str, v)) if isinstance(v, tuple) else str(v)
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp["experiment"] = {"model": self.model, "algorithm": self.algorithm,
                            "trials": str(self.trials), "seed": str(self.seed)}
        cp["model"] = {k: fmt(v) for k, v in self.params.items()}
        cp["algorithm"] = {k: fmt(v) for k, v in self.algo.items()}
        cp["sweep"] = {k: ", ".join(fmt(x) for x in v) for k, v in self.sweep.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def digest(self) -> str:
        blob = json.dumps({"model": self.model, "algorithm": self.algorithm,
                           "params": self.params, "algo": self.algo,
                           "sweep": self.sweep, "trials": self.trials,
                           "seed": self.seed}, sort_keys=True, default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def grid(self) -> list[dict]:
        axes = list(self.sweep)
        return [dict(zip(axes, combo)) for combo in itertools.product(*self.sweep.values())]


@dataclass
class TrialReport:
    point: dict
    trial: int
    seed: int
    error_fraction: float
    worst_cluster_error: float
    exact: bool
    n_edges: int = 0
    error: str = ""
    timings: dict = field(default_factory=dict)


def trial_seed(base: int, grid_index: int, trial: int) -> int:
    words = np.random.SeedSequence([base, grid_index, trial]).generate_state(2, dtype=np.uint32)
    return int(words[0]) << 31 | int(words[1]) >> 1


def _alpha(n, d, values, sbm_pq=None, sizes=None, theta=None):
    """Turn exactly one sparsity key into alpha."""
    given = {k: v for k, v in values.items() if k in ALPHA_KEYS and v is not None}
    if len(given) != 1:
        raise InvalidParams(f"give exactly one of {sorted(ALPHA_KEYS)}; got {sorted(given)}")
    (key, c), = given.items()
    total = comb(n, d)
    if key == "alpha":
        return float(c)
    if key == "c_nlogn":
        return c * n * log(n) / total
    if key == "c_n":
        return c * n / total
    if key == "threshold" and sbm_pq is not None:
        p, q = sbm_pq
        ratio = n / min(sizes)
        return c * 9 * ratio ** (d - 1) / d * n * log(n) * p / ((p - q) ** 2 * total)
    if key == "limit" and theta is not None:
        return c * cbm_information_limit(n, d, theta) / total
    raise InvalidParams(f"{key!r} does not apply to this model")


def strong_consistency_alpha(n, d, sizes, p, q, c=1.0) -> float:
    """alpha with (p-q)^2/p C(n,d) alpha = c 9 (n/n_min)^(d-1)/d n log n."""
    return _alpha(n, d, {"threshold": c}, sbm_pq=(p, q), sizes=sizes)


def resolve(cfg: ExperimentConfig, point: dict):
    """Model parameters and algorithm config for one grid point."""
    merged = {**cfg.params, **{k: v for k, v in point.items() if k in MODEL_KEYS[cfg.model]}}
    algo = {**cfg.algo, **{k: v for k, v in point.items() if k in ALGORITHM_KEYS}}
    try:
        model = _model_params(cfg.model, merged)
        k = {"sbm": lambda: model.k, "cbm": lambda: 2, "clique": lambda: 2,
             "subspace": lambda: model[0].k}[cfg.model]()
        hc = HscConfig(k=k, c_thr=algo.get("c_thr"), restarts=int(algo.get("restarts", 10)),
                       eigen_mode=algo.get("eigen_mode", "assortative"),
                       epsilon=float(algo.get("epsilon", 0.05)))
        alg = hc if cfg.algorithm != "hsclr" else HsclrConfig(hc, beta=algo.get("beta"))
    except InvalidParams:
        raise
    except (TypeError, KeyError, ValueError) as exc:
        raise InvalidParams(f"bad parameters {merged}: {exc}") from exc
    return model, alg


def _model_params(model: str, m: dict):
    if model == "sbm":
        n, d = int(m["n"]), int(m["d"])
        sizes = m.get("sizes")
        if sizes is None:
            k = int(m.get("k", 2))
            if n % k:
                raise InvalidParams(f"n={n} is not divisible by k={k}; give sizes")
            sizes = (n // k,) * k
        sizes = tuple(int(s) for s in (sizes if isinstance(sizes, tuple) else (sizes,)))
        p, q = float(m["p"]), float(m["q"])
        group_p = m.get("group_p")
        if group_p is not None:
            group_p = tuple(float(v) for v in (group_p if isinstance(group_p, tuple) else (group_p,)))
        a = _alpha(n, d, m, sbm_pq=(max(group_p) if group_p else p, q), sizes=sizes)
        return SbmParams(n=n, d=d, cluster_sizes=sizes, p=p, q=q, alpha=a,
                         weight_kind=m.get("weight_kind", "bernoulli"),
                         assortative=bool(m.get("assortative", True)), group_p=group_p)
    if model == "cbm":
        n, d, th = int(m["n"]), int(m["d"]), float(m["theta"])
        return CbmParams(n=n, d=d, theta=th, alpha=_alpha(n, d, m, theta=th))
    if model == "clique":
        return (int(m["n"]), int(m["d"]), int(m["s"]))
    sp = SubspaceParams(k=int(m["k"]), m=int(m["m"]), ell=int(m["ell"]),
                        points_per_cluster=int(m["points_per_cluster"]),
                        sigma=float(m["sigma"]), d=int(m["d"]),
                        s_n=None if m.get("s_n") is None else float(m["s_n"]),
                        affine=bool(m.get("affine", False)))
    if m.get("budget") is not None:
        if m.get("s_n") is not None:
            raise InvalidParams("give s_n or budget, not both")
        sp = replace(sp, s_n=min(1.0, float(m["budget"]) / comb(sp.n, sp.d)))
    tau = m.get("tau")
    return sp, (None if tau is None else float(tau))


def _run_algorithm(h, alg, algorithm, seed, timings):
    if algorithm == "hsc":
        return hsc(h, alg, seed, timings)
    if algorithm == "hsclr":
        return hsclr(h, alg, seed, timings)
    return hsclr_ml(h, alg, seed, timings)


def _score(point, trial, seed, est, truth, n_edges, timings) -> TrialReport:
    err = error_fraction(est, truth).error_fraction
    return TrialReport(point, trial, seed, err, worst_cluster_error(est, truth),
                       err == 0.0, n_edges, "", timings)


def _failed(point, trial, seed, message, n_edges=0, timings=None) -> TrialReport:
    return TrialReport(point, trial, seed, float("nan"), float("nan"), False, n_edges,
                       message, timings or {})


def run_subspace_pipeline(params: SubspaceParams, cfg: HsclrConfig, seed: int,
                          tau: float | None = None, point=None, trial: int = 0) -> TrialReport:
    """Sample points, sketch the fitting hypergraph, run HSCLR and score it.

    An empty sketch (for instance s_n = 0) is reported as a failed trial.
    """
    point = {} if point is None else point
    timings: dict = {}
    t0 = time.perf_counter()
    cloud, truth = sample_subspace_points(params, seed)
    h = sketch_hypergraph(cloud, params, seed, tau=tau)
    timings["sample"] = time.perf_counter() - t0
    if len(h) == 0:
        return _failed(point, trial, seed, "empty sketch", 0, timings)
    est = hsclr(h, cfg, seed, timings)
    return _score(point, trial, seed, est, truth, len(h), timings)


def run_trial(cfg: ExperimentConfig, grid_index: int, point: dict, trial: int) -> TrialReport:
    """One seeded trial; library errors are caught and recorded in the report."""
    seed = trial_seed(cfg.seed, grid_index, trial)
    timings: dict = {}
    n_edges = 0
    try:
        model, alg = resolve(cfg, point)
        if cfg.model == "subspace":
            sp, tau = model
            if isinstance(alg, HsclrConfig):
                return run_subspace_pipeline(sp, alg, seed, tau, point, trial)
            t0 = time.perf_counter()
            cloud, truth = sample_subspace_points(sp, seed)
            h = sketch_hypergraph(cloud, sp, seed, tau=tau)
            timings["sample"] = time.perf_counter() - t0
            if len(h) == 0:
                return _failed(point, trial, seed, "empty sketch", 0, timings)
        else:
            t0 = time.perf_counter()
            if cfg.model == "sbm":
                h, truth = sample_weighted_sbm(model, seed)
            elif cfg.model == "cbm":
                truth = balanced_partition(model.n, 2)
                h = sample_censored_bm(model, truth, seed)
            else:
                h, truth = sample_planted_clique(*model, seed)
            timings["sample"] = time.perf_counter() - t0
        n_edges = len(h)
        est = _run_algorithm(h, alg, cfg.algorithm, seed, timings)
        return _score(point, trial, seed, est, truth, n_edges, timings)
    except HypersbmError as exc:
        return _failed(point, trial, seed, f"{type(exc).__name__}: {exc}", n_edges, timings)


def _run_task(task):
    return run_trial(*task)


def iter_sweep(cfg: ExperimentConfig, jobs: int = 1) -> Iterator[TrialReport]:
    """Yield reports in (grid point, trial) order as they complete."""
    tasks = [(cfg, g, point, t) for g, point in enumerate(cfg.grid()) for t in range(cfg.trials)]
    if jobs <= 1:
        yield from map(_run_task, tasks)
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(_run_task, tasks)


def run_sweep(cfg: ExperimentConfig, jobs: int = 1) -> list[TrialReport]:
    return list(iter_sweep(cfg, jobs))


# --- output ---------------------------------------------------------------


def csv_header(cfg: ExperimentConfig) -> str:
    return f"# hypersbm {__version__} config={cfg.digest()}\n"


def report_columns(cfg: ExperimentConfig, timing: bool = True) -> list[str]:
    cols = list(cfg.sweep) + ["trial", "seed", "error_fraction", "worst_cluster_error",
                              "exact", "n_edges", "error"]
    return cols + [f"t_{s}" for s in STAGES] if timing else cols


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return " ".join(map(str, v))
    return v


def report_row(r: TrialReport, cfg: ExperimentConfig, timing: bool = True) -> list:
    row = [_fmt(r.point[a]) for a in cfg.sweep]
    row += [r.trial, r.seed, _fmt(r.error_fraction), _fmt(r.worst_cluster_error),
            int(r.exact), r.n_edges, r.error]
    if timing:
        row += [f"{r.timings.get(s, 0.0):.6f}" for s in STAGES]
    return row


def write_reports(reports: Iterable[TrialReport], cfg: ExperimentConfig, out,
                  timing: bool = True) -> None:
    """Stream reports to ``out`` as CSV, flushing after every row."""
    out.write(csv_header(cfg))
    w = csv.writer(out, lineterminator="\n")
    w.writerow(report_columns(cfg, timing))
    for r in reports:
        w.writerow(report_row(r, cfg, timing))
        out.flush()


@dataclass
class GridSummary:
    point: dict
    trials: int
    failures: int
    mean_error: float
    se_error: float
    exact_rate: float
    ci_low: float
    ci_high: float


def summarize(reports: Iterable[TrialReport], cfg: ExperimentConfig) -> list[GridSummary]:
    """Mean error, its standard error, exact-recovery rate and its 95% Clopper-Pearson CI.

    Failed trials are counted but left out of the statistics.
    """
    groups: dict = {}
    for r in reports:
        groups.setdefault(json.dumps(r.point, sort_keys=True, default=str), []).append(r)
    out = []
    for point in cfg.grid():
        rows = groups.get(json.dumps(point, sort_keys=True, default=str), [])
        ok = [r for r in rows if not r.error]
        errs = np.array([r.error_fraction for r in ok])
        hits = sum(r.exact for r in ok)
        if ok:
            ci = binomtest(hits, len(ok)).proportion_ci(0.95, method="exact")
            se = float(errs.std(ddof=1) / np.sqrt(len(ok))) if len(ok) > 1 else float("nan")
            out.append(GridSummary(point, len(rows), len(rows) - len(ok), float(errs.mean()), se,
                                   hits / len(ok), float(ci.low), float(ci.high)))
        else:
            nan = float("nan")
            out.append(GridSummary(point, len(rows), len(rows), nan, nan, nan, nan, nan))
    return out


def write_summary(summary: list[GridSummary], cfg: ExperimentConfig, out) -> None:
    out.write(csv_header(cfg))
    w = csv.writer(out, lineterminator="\n")
    w.writerow(list(cfg.sweep) + ["trials", "failures", "mean_error", "se_error",
                                  "exact_rate", "ci_low", "ci_high"])
    for s in summary:
        w.writerow([_fmt(s.point[a]) for a in cfg.sweep] +
                   [s.trials, s.failures] + [_fmt(float(v)) for v in
                   (s.mean_error, s.se_error, s.exact_rate, s.ci_low, s.ci_high)])
