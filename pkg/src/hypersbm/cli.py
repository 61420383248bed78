"""Command-line entry point: ``hypersbm <subcommand> ...``.

Exit codes: 0 success, 2 configuration or input error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from contextlib import contextmanager

from .errors import HypersbmError, InvalidParams
from .experiments import (
    ExperimentConfig,
    coerce,
    iter_sweep,
    resolve,
    summarize,
    write_reports,
    write_summary,
)
from .generators import (
    balanced_partition,
    sample_censored_bm,
    sample_planted_clique,
    sample_subspace_points,
    sample_weighted_sbm,
    sketch_hypergraph,
)
from .hypergraph import parse_hypergraph, parse_partition, serialize_hypergraph, serialize_partition
from .metrics import error_fraction, worst_cluster_error
from .pipeline import HscConfig, HsclrConfig, hsc, hsclr, hsclr_ml, ml_refine_cbm

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _key_values(items) -> dict:
    out = {}
    for item in items:
        if "=" not in item:
            raise InvalidParams(f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        out[key.strip()] = coerce(value)
    return out


def _sweep_axes(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise InvalidParams(f"expected axis=v1,v2,..., got {item!r}")
        key, values = item.split("=", 1)
        out[key.strip()] = [coerce(v) for v in values.split(",")]
    return out


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path) as fh:
        return fh.read()


def _algo_overrides(args) -> dict:
    keys = {"c_thr": args.c_thr, "restarts": args.restarts,
            "eigen_mode": args.eigen_mode, "beta": getattr(args, "beta", None)}
    return {k: v for k, v in keys.items() if v is not None}


def _hsc_config(args, k) -> HscConfig:
    return HscConfig(k=k, c_thr=args.c_thr,
                     restarts=args.restarts if args.restarts is not None else 10,
                     eigen_mode=args.eigen_mode or "assortative")


# --- subcommands ------------------------------------------------------------


def cmd_generate(args) -> None:
    params = _key_values(args.params)
    if args.budget is not None:
        params["budget"] = args.budget
    if args.tau is not None:
        params["tau"] = args.tau
    algorithm = "hsclr-ml" if args.model == "cbm" else "hsc"
    cfg = ExperimentConfig(model=args.model, algorithm=algorithm, params=params, seed=args.seed)
    model, _ = resolve(cfg, {})
    if args.model == "sbm":
        h, truth = sample_weighted_sbm(model, args.seed)
    elif args.model == "cbm":
        truth = balanced_partition(model.n, 2)
        h = sample_censored_bm(model, truth, args.seed)
    elif args.model == "clique":
        h, truth = sample_planted_clique(*model, args.seed)
    else:
        sp, tau = model
        cloud, truth = sample_subspace_points(sp, args.seed)
        h = sketch_hypergraph(cloud, sp, args.seed, tau=tau)
    with open(args.out + ".hyp", "w") as fh:
        fh.write(serialize_hypergraph(h))
    with open(args.out + ".part", "w") as fh:
        fh.write(serialize_partition(truth))


def cmd_hsc(args) -> None:
    h = parse_hypergraph(_read(args.input))
    part = hsc(h, _hsc_config(args, args.k), args.seed)
    with _output(args.out) as fh:
        fh.write(serialize_partition(part))


def cmd_hsclr(args) -> None:
    h = parse_hypergraph(_read(args.input))
    part = hsclr(h, HsclrConfig(_hsc_config(args, args.k), beta=args.beta), args.seed)
    with _output(args.out) as fh:
        fh.write(serialize_partition(part))


def cmd_cbm_refine(args) -> None:
    h = parse_hypergraph(_read(args.input))
    if args.init is not None:
        part = ml_refine_cbm(h, parse_partition(_read(args.init), k=2))
    else:
        part = hsclr_ml(h, _hsc_config(args, 2), args.seed)
    with _output(args.out) as fh:
        fh.write(serialize_partition(part))


def cmd_score(args) -> None:
    truth = parse_partition(_read(args.truth))
    est = parse_partition(_read(args.estimate), k=truth.k)
    res = error_fraction(est, truth)
    line = (f"{repr(res.error_fraction)},{repr(worst_cluster_error(est, truth))},"
            f"{int(res.error_fraction == 0.0)},{truth.n},{truth.k}\n")
    with _output(args.out) as fh:
        fh.write(line)


def _run_and_write(cfg: ExperimentConfig, args) -> None:
    reports = []

    def tee():
        for r in iter_sweep(cfg, args.jobs):
            reports.append(r)
            yield r

    with _output(args.out) as fh:
        write_reports(tee(), cfg, fh, timing=not args.no_timing)
    if args.summary:
        with _output(args.summary) as fh:
            write_summary(summarize(reports, cfg), cfg, fh)


def cmd_sweep(args) -> None:
    cfg = ExperimentConfig.from_ini(_read(args.config))
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    algo = {**cfg.algo, **_algo_overrides(args)}
    params = dict(cfg.params)
    if args.budget is not None:
        params["budget"] = args.budget
    if args.tau is not None:
        params["tau"] = args.tau
    cfg = ExperimentConfig(model=cfg.model, algorithm=cfg.algorithm, params=params, algo=algo,
                           sweep=cfg.sweep, trials=changes.get("trials", cfg.trials),
                           seed=changes.get("seed", cfg.seed))
    _run_and_write(cfg, args)


def cmd_subspace(args) -> None:
    params = _key_values(args.params)
    if args.budget is not None:
        params["budget"] = args.budget
    if args.tau is not None:
        params["tau"] = args.tau
    cfg = ExperimentConfig(model="subspace", algorithm=args.algorithm, params=params,
                           algo=_algo_overrides(args), sweep=_sweep_axes(args.sweep),
                           trials=args.trials, seed=args.seed)
    _run_and_write(cfg, args)


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--out", default=None, help="output path (default stdout)")

    algo = argparse.ArgumentParser(add_help=False)
    algo.add_argument("--c-thr", type=float, default=None, help="trimming constant")
    algo.add_argument("--restarts", type=int, default=None, help="k-means restarts")
    algo.add_argument("--eigen-mode", choices=("assortative", "disassortative"), default=None)

    beta = argparse.ArgumentParser(add_help=False)
    beta.add_argument("--beta", type=float, default=None, help="edge splitting rate")

    sketch = argparse.ArgumentParser(add_help=False)
    sketch.add_argument("--budget", type=float, default=None,
                        help="expected number of sketched edges C(n,d) s_n")
    sketch.add_argument("--tau", type=float, default=None, help="fitting-weight scale")

    table = argparse.ArgumentParser(add_help=False)
    table.add_argument("--summary", default=None, help="write per-grid-point summary CSV here")
    table.add_argument("--no-timing", action="store_true", help="omit wall-time columns")

    p = argparse.ArgumentParser(prog="hypersbm", description="Hypergraph spectral clustering toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    def seeded(parser, default=0):
        parser.add_argument("--seed", type=int, default=default,
                            help="base seed" if default is None else "random seed")
        return parser

    g = seeded(sub.add_parser("generate", parents=[common, sketch], help="sample a model instance"))
    g.add_argument("model", choices=("sbm", "cbm", "clique", "subspace"))
    g.add_argument("params", nargs="*", help="model parameters as key=value")
    g.set_defaults(func=cmd_generate, out_required=True)

    for name, func, parents in (("hsc", cmd_hsc, [common, algo]),
                                ("hsclr", cmd_hsclr, [common, algo, beta])):
        s = seeded(sub.add_parser(name, parents=parents, help=f"run {name.upper()} on an edge list"))
        s.add_argument("input", help="edge-list file, or - for stdin")
        s.add_argument("--k", type=int, required=True, help="number of clusters")
        s.set_defaults(func=func)

    c = seeded(sub.add_parser("cbm-refine", parents=[common, algo],
                              help="censored-model pipeline or a single likelihood pass"))
    c.add_argument("input")
    c.add_argument("--init", default=None, help="partition to refine; default runs HSC first")
    c.set_defaults(func=cmd_cbm_refine)

    sc = seeded(sub.add_parser("score", parents=[common], help="compare an estimate to the truth"))
    sc.add_argument("estimate")
    sc.add_argument("truth")
    sc.set_defaults(func=cmd_score)

    sw = seeded(sub.add_parser("sweep", parents=[common, algo, beta, sketch, table],
                               help="run a Monte-Carlo sweep from an INI config"), default=None)
    sw.add_argument("config")
    sw.add_argument("--trials", type=int, default=None)
    sw.set_defaults(func=cmd_sweep)

    ss = seeded(sub.add_parser("subspace", parents=[common, algo, beta, sketch, table],
                               help="sketched subspace clustering trials"))
    ss.add_argument("params", nargs="*", help="k, m, ell, points_per_cluster, sigma, d as key=value")
    ss.add_argument("--sweep", action="append", help="axis=v1,v2,... (repeatable)")
    ss.add_argument("--trials", type=int, default=20)
    ss.add_argument("--algorithm", choices=("hsc", "hsclr"), default="hsclr")
    ss.set_defaults(func=cmd_subspace)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "out_required", False) and not args.out:
        parser.error("generate needs --out PREFIX")
    try:
        args.func(args)
    except (ValueError, OSError) as exc:   # includes every input/config error type
        print(f"hypersbm: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (HypersbmError, RuntimeError) as exc:
        print(f"hypersbm: runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
