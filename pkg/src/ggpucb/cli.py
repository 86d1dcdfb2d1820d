"""Command-line interface: ``ggpucb <subcommand> ...``.

Exit status is 0 on success, 1 when the library reports an error and 2 for
usage errors (unknown subcommand or flag, no arguments).
"""

from __future__ import annotations

import argparse
import io
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .acquisition import RunRecord, UcbConfig, run_ucb
from .benchmarks import OBJECTIVES
from .errors import GGPError
from .ggp import MATERN, SE, KernelSpec, graph_gp
from .graph import EMPIRICAL_L2, EUCLIDEAN_UNIT, graph_spectrum, suggest_connectivity
from .harness import ExperimentConfig, _Context, run_experiment
from .io import atomic_write_text
from .mle import MleProblem, default_grid, estimate, nll_profile
from .point_cloud import (
    bundled_manifold,
    load_point_cloud,
    sample_circle,
    sample_peanut_tube,
    sample_sphere,
    save_point_cloud,
)

log = logging.getLogger("ggpucb")

SAMPLERS = {"circle": sample_circle, "sphere": sample_sphere, "peanut": sample_peanut_tube}


def _emit(text: str, out):
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def _cloud_from_args(args):
    if args.cloud in SAMPLERS:
        return SAMPLERS[args.cloud](args.n, args.seed)
    if args.cloud.startswith("bundled:"):
        return bundled_manifold(args.cloud.split(":", 1)[1])
    if args.intrinsic_dim is None:
        raise ValueError("--intrinsic-dim is required when --cloud is a file")
    return load_point_cloud(args.cloud, args.intrinsic_dim)


def _add_cloud_flags(p, default_n=500):
    p.add_argument("--cloud", default="circle",
                   help="circle, sphere, peanut, bundled:<name> or a path to a point file (default circle)")
    p.add_argument("--n", type=int, default=default_n, help=f"points to sample (default {default_n})")
    p.add_argument("--intrinsic-dim", type=int, default=None, help="manifold dimension for file clouds")


def _add_graph_flags(p, k=20):
    p.add_argument("--h-coeff", type=float, default=4.0, help="connectivity coefficient c (default 4)")
    p.add_argument("--h-rule", choices=("experiment", "theory"), default="experiment",
                   help="h = c N^(-1/2) (experiment) or c N^(-1/(2m)) (theory); default experiment")
    p.add_argument("--k", type=int, default=k, help=f"number of eigenpairs (default {k})")


def _add_kernel_flags(p):
    p.add_argument("--family", choices=(MATERN, SE), default=MATERN, help="prior family (default matern)")
    p.add_argument("--kappa", type=float, default=1.0, help="Matérn kappa (default 1)")
    p.add_argument("--s", type=float, default=2.0, help="Matérn smoothness s (default 2)")
    p.add_argument("--tau", type=float, default=0.1, help="SE length parameter tau (default 0.1)")


def _kernel(args, m, k):
    if args.family == MATERN:
        return KernelSpec.matern(args.kappa, args.s, m, k=k)
    return KernelSpec.se(args.tau, m, k=k)


def cmd_sample(args):
    cloud = _cloud_from_args(args)
    if not args.prior_draw:
        if args.out:
            save_point_cloud(cloud, args.out)
        else:
            for row in cloud.points:
                print(",".join(repr(float(v)) for v in row))
        return 0
    h = suggest_connectivity(cloud, args.h_coeff, args.h_rule)
    spec = graph_spectrum(cloud, h, args.k)
    draw = graph_gp(spec, _kernel(args, cloud.intrinsic_dim, args.k)).sample_prior(args.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["point_index", "value"])
    for i, v in enumerate(draw):
        w.writerow([i, repr(float(v))])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_spectrum(args):
    cloud = _cloud_from_args(args)
    h = suggest_connectivity(cloud, args.h_coeff, args.h_rule)
    spec = graph_spectrum(cloud, h, args.k, normalization=args.normalization)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "eigenvalue"])
    for i, lam in enumerate(spec.eigenvalues, start=1):
        w.writerow([i, repr(float(lam))])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_optimize(args):
    overrides = {"L": args.L, "trials": 1, "seed": args.seed, "methods": "ggp-ucb", "name": "optimize"}
    if args.objective:
        overrides["objective"] = args.objective
    if args.config:
        cfg = ExperimentConfig.load(args.config).replace(**overrides)
    else:
        objective = args.objective or "circle-matern"
        cfg = ExperimentConfig.from_mapping({**_default_optimize_mapping(objective), **overrides,
                                             "objective": objective})
    ctx = _Context(cfg)
    f = ctx.truth(0)
    sd = ctx.noise_sd(f)
    ucb = UcbConfig(mode=cfg.b_mode, delta=cfg.delta, a=cfg.a, epsilon=cfg.epsilon)

    def progress(l, z, best):
        log.info("ggp-ucb 0 %d %.6g", l, best)

    run = run_ucb(ctx.ggp, f, sd, cfg.L, ucb, seed=args.seed, progress=progress if args.verbose else None)
    _emit(run.to_csv(), args.out)
    log.info("recommendation %d", run.recommendation)
    return 0


def _default_optimize_mapping(objective):
    if objective == "heat":
        return {"cloud": "sphere", "n": 3000, "h_rule": "theory", "h_coeff": 1.5, "k": 70,
                "prior_kappa": 1, "prior_s": 4, "heat_eigenvalue_scale": 4 * np.pi}
    if objective.startswith("manifold"):
        return {"cloud": "bundled:peanut2930", "coarse_n": 2000, "coarse_seed": 8, "k": 50,
                "prior_kappa": np.sqrt(5), "prior_s": 2.5, "truth_kappa": np.sqrt(5), "truth_s": 2.5,
                "truth_k": 50, "prior_family": objective.split("-")[1], "prior_tau": 0.005, "truth_tau": 0.005}
    family = SE if objective == "circle-se" else MATERN
    return {"prior_family": family, "prior_kappa": np.sqrt(15), "truth_kappa": np.sqrt(15),
            "prior_s": 1 if objective in ("levy", "ackley", "rastrigin") else 2}


def cmd_experiment(args, overrides):
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        cfg = cfg.replace(**overrides)
    result = run_experiment(cfg, out_dir=args.out_dir, jobs=args.jobs, verbose=args.verbose)
    summary = result.summary()
    print(json.dumps({m: {"final_mean": e["final_mean"], "complete": e["complete"]}
                      for m, e in summary["methods"].items()}, indent=2))
    print(f"results written to {Path(args.out_dir) / cfg.name}", file=sys.stderr)
    return 0


def cmd_estimate(args):
    if args.noise_sd is None:
        raise ValueError("--noise-sd is required")
    run = RunRecord.from_csv(Path(args.run).read_text())
    cloud = _cloud_from_args(args)
    h = suggest_connectivity(cloud, args.h_coeff, args.h_rule)
    spec = graph_spectrum(cloud, h, args.k)
    base = _kernel(args, cloud.intrinsic_dim, args.k)
    q, y = run.evaluated(), run.all_observations()
    if q.size and q.max() >= cloud.n:
        raise ValueError(f"run record refers to point {q.max()} but the cloud has {cloud.n} points")
    key = "s" if base.family == MATERN else "tau"
    grid = default_grid(base.family)
    # iteration 0 is the seeded start point when the record has one
    first = 0 if run.initial_query is not None else 1
    print(f"iteration,{key}")
    for j in range(1, q.size + 1):
        prob = MleProblem(spec, base, q[:j], y[:j], args.noise_sd, grid)
        print(f"{j - 1 + first},{estimate(prob)!r}")
    if args.profile:
        print(f"{key},nll")
        for g, v in zip(prob.grid, nll_profile(prob)):
            print(f"{g!r},{v!r}")
    return 0


def cmd_benchmarks(args):
    for name, desc in OBJECTIVES.items():
        print(f"{name}\t{desc}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ggpucb", description="Bayesian optimization on point clouds with graph GPs.")
    parser.add_argument("--verbose", action="store_true", help="progress lines on stderr")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def common(p, seed_default=0):
        p.add_argument("--seed", type=int, default=seed_default, help=f"random seed (default {seed_default})")
        p.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS, help="progress lines on stderr")

    p = sub.add_parser("sample", help="sample a point cloud or a graph-GP prior draw")
    _add_cloud_flags(p)
    _add_graph_flags(p)
    _add_kernel_flags(p)
    p.add_argument("--prior-draw", action="store_true", help="emit 'point_index,value' for a GGP draw instead of points")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("spectrum", help="graph-Laplacian eigenvalues as CSV")
    _add_cloud_flags(p)
    _add_graph_flags(p, k=30)
    p.add_argument("--normalization", choices=(EMPIRICAL_L2, EUCLIDEAN_UNIT), default=EMPIRICAL_L2,
                   help="eigenvector normalization (default empirical-L2)")
    p.add_argument("--out", default=None, help="output file (default stdout)")
    common(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("optimize", help="a single GGP-UCB run on a named objective")
    p.add_argument("--objective", choices=sorted(OBJECTIVES), default=None,
                   help="objective name (default: the config's, else circle-matern)")
    p.add_argument("--config", default=None, help="config file supplying cloud, prior and truth settings")
    p.add_argument("--L", type=int, default=50, help="iterations (default 50)")
    p.add_argument("--out", default=None, help="run record CSV (default stdout)")
    common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("experiment", help="run a multi-trial experiment config")
    p.add_argument("--config", default=None, help="key = value config file")
    p.add_argument("--out-dir", default="results", help="output directory (default ./results)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--seed", type=int, default=None, help="master seed (default: config value)")
    p.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS, help="progress lines on stderr")
    for name in ExperimentConfig.field_names():
        if name == "seed":
            continue
        p.add_argument("--" + name.replace("_", "-"), dest="cfg_" + name, default=None, metavar="VALUE",
                       help=f"override config key {name} (default: {getattr(ExperimentConfig(), name)})")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("estimate", help="grid MLE of s (Matérn) or tau (SE) from a run record CSV")
    p.add_argument("--run", required=True, help="run record CSV written by 'optimize'")
    p.add_argument("--noise-sd", type=float, default=None, help="observation noise standard deviation")
    p.add_argument("--profile", action="store_true", help="also print 'theta,nll' for every grid point")
    _add_cloud_flags(p)
    _add_graph_flags(p)
    _add_kernel_flags(p)
    common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("benchmarks", help="list available objectives")
    p.add_argument("action", choices=("list",), help="'list'")
    p.set_defaults(func=cmd_benchmarks)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s", stream=sys.stderr)
    try:
        if args.command == "experiment":
            overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
            return args.func(args, overrides)
        return args.func(args)
    except (GGPError, ValueError, KeyError, OSError, ArithmeticError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
