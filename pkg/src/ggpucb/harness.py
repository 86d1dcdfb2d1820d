"""Multi-trial experiment driver.

An experiment is described by a flat ``key = value`` text file (see
:class:`ExperimentConfig` for the keys and their defaults). For every method
and trial the driver runs one optimization, records a per-iteration trace
(simple regret, or recovery error for the heat problem), and aggregates the
traces into mean and 10/90 percentile bands.

Randomness is derived from the master seed through a stable hash of
``(seed, label, trial)``, so traces do not depend on method order, on the
number of trials, or on whether trials run in a worker pool.
"""

from __future__ import annotations

import dataclasses
import hashlib
import io
import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .acquisition import UcbConfig, random_search_baseline, run_ucb, RunRecord
from .benchmarks import (
    CIRCLE_FUNCTIONS,
    attainable_discrepancy,
    circle_benchmark,
    euclidean_kernel_model,
    heat_objective_all,
    make_heat_problem,
    noise_sd_rule,
    sampled_truth,
)
from .errors import GGPError
from .ggp import MATERN, SE, KernelSpec, circle_oracle, graph_gp
from .graph import graph_spectrum, suggest_connectivity
from .io import atomic_write_text
from .mle import MleRefit
from .point_cloud import (
    PointCloud,
    bundled_manifold,
    load_point_cloud,
    sample_circle,
    sample_peanut_tube,
    sample_sphere,
    subsample,
)

log = logging.getLogger(__name__)

GGP = "ggp-ucb"
MGP = "mgp-ucb"
GGP_ML = "ggp-ucb-ml"
EGP = "egp-ucb"
RANDOM = "random"
METHODS = (GGP, MGP, GGP_ML, EGP, RANDOM)

OBJECTIVE_KINDS = ("circle-matern", "circle-se", *CIRCLE_FUNCTIONS, "manifold-matern", "manifold-se", "heat")


def _floats(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _names(text) -> tuple:
    if isinstance(text, (tuple, list)):
        return tuple(text)
    return tuple(v.strip() for v in str(text).split(",") if v.strip())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text):
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    return float(text)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one experiment.

    Cloud: ``cloud`` is ``circle``, ``sphere``, ``peanut`` (sampled),
    ``bundled:<name>`` or ``file:<path>``; ``intrinsic_dim`` is needed only
    for files. ``coarse_n > 0`` optimizes on a seeded subsample of the
    cloud while truths live on the full cloud.

    Graph: ``h = h_coeff * N^(-1/2)`` (``h_rule=experiment``) or
    ``h_coeff * N^(-1/(2m))`` (``h_rule=theory``), truncation ``k``.

    Prior: ``prior_family`` with ``prior_kappa``/``prior_s`` or ``prior_tau``.
    Truth (sampled objectives): ``truth_*``, with ``truth_k`` modes of the
    oracle (circle) or the fine-cloud graph (manifold).

    Noise: ``noise_sd`` if set, else ``noise_fraction * ||f||_2 / sqrt(N)``.
    """

    name: str = "experiment"
    objective: str = "circle-matern"
    cloud: str = "circle"
    n: int = 500
    intrinsic_dim: int = 0
    cloud_seed: int = 0
    coarse_n: int = 0
    coarse_seed: int = 0
    h_rule: str = "experiment"
    h_coeff: float = 4.0
    k: int = 20
    prior_family: str = MATERN
    prior_kappa: float = 1.0
    prior_s: float = 2.0
    prior_tau: float = 0.1
    truth_kappa: float = 1.0
    truth_s: float = 2.0
    truth_tau: float = 0.1
    truth_k: int = 100
    mgp_k: int = 100
    ml_kappa: float = 1.0
    ml_refit_every: int = 1
    egp_nu: tuple = (0.5, 1.5, 2.5)
    egp_kappa: tuple = (0.5, 1.0, 2.5, 5.0, 10.0)
    egp_tau: tuple = (0.01, 0.1, 1.0)
    noise_fraction: float = 0.05
    noise_sd: float | None = None
    b_mode: str = "empirical"
    a: float = 0.5
    delta: float = 0.1
    epsilon: float = 0.0
    L: int = 50
    trials: int = 50
    seed: int = 0
    methods: tuple = (GGP,)
    heat_zeta: float = 2.0
    heat_t: float = 0.25
    heat_noise_sd: float = 0.1
    heat_l_max: int = 5
    heat_source_seed: int = 5
    heat_data_seed: int = 11
    heat_eigenvalue_scale: float = 1.0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if self.objective not in OBJECTIVE_KINDS:
            raise ValueError(f"unknown objective {self.objective!r}; choose from {list(OBJECTIVE_KINDS)}")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown or not self.methods:
            raise ValueError(f"unknown or missing methods {unknown}; choose from {list(METHODS)}")
        if MGP in self.methods and not self.objective.startswith("circle") and self.objective not in CIRCLE_FUNCTIONS:
            raise ValueError("mgp-ucb needs the analytic circle eigenpairs")
        if self.h_rule not in ("experiment", "theory"):
            raise ValueError("h_rule must be 'experiment' or 'theory'")
        if self.prior_family not in (MATERN, SE):
            raise ValueError("prior_family must be 'matern' or 'se'")
        UcbConfig(mode=self.b_mode, delta=self.delta, a=self.a, epsilon=self.epsilon)

    # --- text form ---------------------------------------------------------

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def coerce(cls, key: str, value):
        kinds = {f.name: f.type for f in fields(cls)}
        if key not in kinds:
            raise KeyError(f"unknown config key {key!r}")
        kind = kinds[key]
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "float | None":
            return _optional_float(value)
        if kind == "bool":
            return _bool(value)
        if kind == "tuple":
            return _names(value) if key == "methods" else _floats(value)
        return str(value).strip()

    @classmethod
    def from_mapping(cls, mapping) -> "ExperimentConfig":
        return cls(**{k: cls.coerce(k, v) for k, v in mapping.items()})

    @classmethod
    def parse(cls, text: str) -> "ExperimentConfig":
        """Parse ``key = value`` lines; ``#`` starts a comment."""
        return cls.from_mapping(parse_key_values(text))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.parse(Path(path).read_text())

    def replace(self, **overrides) -> "ExperimentConfig":
        return dataclasses.replace(self, **{k: self.coerce(k, v) for k, v in overrides.items()})

    def dumps(self) -> str:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif v is None:
                v = "none"
            out.append(f"{f.name} = {v}")
        return "\n".join(out) + "\n"


def parse_key_values(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        if key in out:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def derive_seed(master: int, *parts) -> int:
    """Stable 63-bit seed from the master seed and any labels."""
    text = "|".join(str(p) for p in (master, *parts))
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big") >> 1


# --- traces ---------------------------------------------------------------

def simple_regret(values, run: RunRecord) -> np.ndarray:
    """``f(z*) - max_{k <= l} f(z_k)`` for ``l = 1..L`` using noise-free ``values``.

    The starting point, if the run has one, counts as already evaluated.
    """
    f = np.asarray(values, dtype=float)
    best = np.maximum.accumulate(f[run.queries])
    if run.initial_query is not None:
        best = np.maximum(best, f[run.initial_query])
    return np.maximum(f.max() - best, 0.0)


def recovery_error(problem, run: RunRecord, values=None) -> np.ndarray:
    """Distance from the true source to the incumbent (best ``f_N`` so far) per iteration."""
    f = heat_objective_all(problem) if values is None else np.asarray(values, dtype=float)
    ev = run.evaluated()
    offset = ev.size - run.L
    incumbents = np.empty(run.L, dtype=np.intp)
    best, arg = -np.inf, -1
    for j, z in enumerate(ev):
        if f[z] > best:
            best, arg = f[z], z
        if j >= offset:
            incumbents[j - offset] = arg
    X = problem.cloud.points
    return np.linalg.norm(X[incumbents] - X[problem.z_star], axis=1)


@dataclass
class RegretTrace:
    """Per-trial traces of one method; failed trials hold ``nan`` rows."""

    method: str
    values: np.ndarray
    errors: dict = field(default_factory=dict)
    estimates: dict = field(default_factory=dict)

    @property
    def ok(self) -> np.ndarray:
        return ~np.isnan(self.values).any(axis=1)

    @property
    def complete(self) -> bool:
        return not self.errors

    def aggregate(self):
        """``(mean, p10, p90)`` per iteration over successful trials."""
        v = self.values[self.ok]
        if v.shape[0] == 0:
            nan = np.full(self.values.shape[1], np.nan)
            return nan, nan.copy(), nan.copy()
        return v.mean(axis=0), np.percentile(v, 10, axis=0), np.percentile(v, 90, axis=0)

    def to_csv(self) -> str:
        mean, p10, p90 = self.aggregate()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "mean", "p10", "p90"])
        for l in range(mean.size):
            w.writerow([l + 1, repr(float(mean[l])), repr(float(p10[l])), repr(float(p90[l]))])
        return buf.getvalue()


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    traces: dict
    runtime: float
    extras: dict = field(default_factory=dict)

    def summary(self) -> dict:
        out = {"experiment": self.config.name, "objective": self.config.objective,
               "trials": self.config.trials, "L": self.config.L,
               "runtime_seconds": round(self.runtime, 3), "methods": {}}
        out.update(self.extras)
        for name, tr in self.traces.items():
            mean, p10, p90 = tr.aggregate()
            ok = tr.ok
            final = tr.values[ok, -1]
            entry = {
                "final_mean": float(mean[-1]), "final_p10": float(p10[-1]), "final_p90": float(p90[-1]),
                "first_mean": float(mean[0]),
                "fraction_zero_final": float(np.mean(final == 0)) if final.size else float("nan"),
                "successful_trials": int(ok.sum()),
                "complete": tr.complete,
                "errors": {str(k): v for k, v in sorted(tr.errors.items())},
            }
            if tr.estimates:
                finals = [float(v[-1]) for v in tr.estimates.values() if len(v)]
                entry["median_final_estimate"] = float(np.median(finals)) if finals else None
            out["methods"][name] = entry
        return out

    def write(self, out_dir) -> Path:
        """Write ``<out_dir>/<name>/<method>.csv`` and ``summary.json``; returns the directory."""
        target = Path(out_dir) / self.config.name
        target.mkdir(parents=True, exist_ok=True)
        for name, tr in self.traces.items():
            atomic_write_text(target / f"{name}.csv", tr.to_csv())
        atomic_write_text(target / "config.cfg", self.config.dumps())
        atomic_write_text(target / "summary.json", json.dumps(_jsonable(self.summary()), indent=2) + "\n")
        return target


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


# --- experiment context ------------------------------------------------------

def _method_names(cfg: ExperimentConfig) -> list:
    names = []
    for m in cfg.methods:
        if m != EGP:
            names.append(m)
        elif cfg.prior_family == MATERN:
            names += [f"{EGP}_nu{nu:g}_kappa{kap:g}" for nu in cfg.egp_nu for kap in cfg.egp_kappa]
        else:
            names += [f"{EGP}_tau{tau:g}" for tau in cfg.egp_tau]
    return names


def _load_cloud(cfg: ExperimentConfig) -> PointCloud:
    src = cfg.cloud
    if src == "circle":
        return sample_circle(cfg.n, cfg.cloud_seed)
    if src == "sphere":
        return sample_sphere(cfg.n, cfg.cloud_seed)
    if src == "peanut":
        return sample_peanut_tube(cfg.n, cfg.cloud_seed)
    if src.startswith("bundled:"):
        return bundled_manifold(src.split(":", 1)[1])
    if src.startswith("file:"):
        if cfg.intrinsic_dim < 1:
            raise ValueError("a cloud file needs intrinsic_dim >= 1")
        return load_point_cloud(src.split(":", 1)[1], cfg.intrinsic_dim)
    raise ValueError(f"unknown cloud source {src!r}")


def _spec(family, kappa, s, tau, m, k):
    if family == MATERN:
        return KernelSpec.matern(kappa, s, m, k=k)
    return KernelSpec.se(tau, m, k=k)


class _Context:
    """Clouds, spectra and models shared by every trial of an experiment."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        fine = _load_cloud(cfg)
        self.fine = fine
        self.cloud = subsample(fine, cfg.coarse_n, cfg.coarse_seed) if cfg.coarse_n else fine
        m = self.cloud.intrinsic_dim
        self.m = m
        h = suggest_connectivity(self.cloud, cfg.h_coeff, cfg.h_rule)
        need_ml = GGP_ML in cfg.methods
        self.spectrum = graph_spectrum(self.cloud, h, cfg.k)
        self.prior_spec = _spec(cfg.prior_family, cfg.prior_kappa, cfg.prior_s, cfg.prior_tau, m, cfg.k)
        self.ggp = graph_gp(self.spectrum, self.prior_spec)
        self.mgp = None
        if MGP in cfg.methods:
            self.mgp = circle_oracle(self.cloud, cfg.mgp_k, self.prior_spec.with_params(k=None))
        self.ml_base = self.prior_spec.with_params(kappa=cfg.ml_kappa) if cfg.prior_family == MATERN else self.prior_spec
        self.need_ml = need_ml
        self.egp = {}
        for name in _method_names(cfg):
            if not name.startswith(EGP):
                continue
            if cfg.prior_family == MATERN:
                nu, kap = name.split("_nu", 1)[1].split("_kappa")
                self.egp[name] = euclidean_kernel_model(self.cloud, MATERN, nu=float(nu), kappa=float(kap))
            else:
                self.egp[name] = euclidean_kernel_model(self.cloud, SE, tau=float(name.split("_tau", 1)[1]))
        self.truth_model = None
        self.fixed_values = None
        self.heat = None
        obj = cfg.objective
        if obj in CIRCLE_FUNCTIONS:
            self.fixed_values = circle_benchmark(self.cloud, obj)
        elif obj.startswith("circle-"):
            family = obj.split("-", 1)[1]
            tspec = _spec(family, cfg.truth_kappa, cfg.truth_s, cfg.truth_tau, m, None)
            self.truth_model = circle_oracle(self.cloud, cfg.truth_k, tspec)
        elif obj.startswith("manifold-"):
            family = obj.split("-", 1)[1]
            tspec = _spec(family, cfg.truth_kappa, cfg.truth_s, cfg.truth_tau, fine.intrinsic_dim, cfg.truth_k)
            if cfg.coarse_n:
                hf = suggest_connectivity(fine, cfg.h_coeff, cfg.h_rule)
                fine_spec = graph_spectrum(fine, hf, cfg.truth_k)
            else:
                fine_spec = self.spectrum if cfg.truth_k <= cfg.k else graph_spectrum(fine, h, cfg.truth_k)
            self.truth_model = graph_gp(fine_spec, tspec)
        else:
            zs = int(np.random.default_rng(cfg.heat_source_seed).integers(self.cloud.n))
            self.heat = make_heat_problem(
                self.cloud, cfg.heat_zeta, zs, cfg.heat_t, cfg.heat_noise_sd, self.spectrum,
                l_max=cfg.heat_l_max, seed=cfg.heat_data_seed, eigenvalue_scale=cfg.heat_eigenvalue_scale,
            )
            self.fixed_values = heat_objective_all(self.heat)

    def truth(self, trial: int) -> np.ndarray:
        if self.fixed_values is not None:
            return self.fixed_values
        restrict = self.cloud.labels if self.cfg.coarse_n else None
        return sampled_truth(self.truth_model, derive_seed(self.cfg.seed, "truth", trial), restrict)

    def noise_sd(self, values) -> float:
        if self.cfg.noise_sd is not None:
            return self.cfg.noise_sd
        if self.heat is not None:
            return 0.0
        return noise_sd_rule(values, self.cfg.noise_fraction)

    def extras(self) -> dict:
        if self.heat is None:
            return {}
        return {"heat_source_index": self.heat.z_star,
                "attainable_discrepancy": attainable_discrepancy(self.heat, self.fixed_values)}

    def run_trial(self, method: str, trial: int, progress=None):
        cfg = self.cfg
        f = self.truth(trial)
        sd = self.noise_sd(f)
        seed = derive_seed(cfg.seed, method, trial)
        ucb = UcbConfig(mode=cfg.b_mode, delta=cfg.delta, a=cfg.a, epsilon=cfg.epsilon)
        estimates = None
        if method == RANDOM:
            # same evaluation budget as the UCB runs: a start point plus L queries
            r = random_search_baseline(f, self.cloud.n, cfg.L + 1, seed, sd)
            run = RunRecord(r.queries[1:], r.observations[1:], r.betas[1:], r.acquisition_values[1:],
                            r.recommendation, int(r.queries[0]), float(r.observations[0]))
        else:
            refit = None
            if method == GGP:
                model = self.ggp
            elif method == MGP:
                model = self.mgp
            elif method == GGP_ML:
                model = self.ggp
                refit = MleRefit(self.spectrum, self.ml_base, sd)
            else:
                model = self.egp[method]
            run = run_ucb(model, f, sd, cfg.L, ucb, seed=seed, refit=refit,
                          refit_every=cfg.ml_refit_every, progress=progress)
            estimates = run.estimates
        if self.heat is not None:
            trace = recovery_error(self.heat, run, self.fixed_values)
        else:
            trace = simple_regret(f, run)
        return trace, estimates


# worker-pool plumbing: each process builds the shared context once
_WORKER_CTX = None


def _init_worker(cfg):
    global _WORKER_CTX
    _WORKER_CTX = _Context(cfg)


def _safe_trial(ctx, method, trial, progress=None):
    try:
        trace, est = ctx.run_trial(method, trial, progress)
        return trace, est, None
    except (GGPError, ValueError, ArithmeticError, IndexError) as exc:
        return None, None, f"{type(exc).__name__}: {exc}"


def _pool_task(args):
    method, trial = args
    return _safe_trial(_WORKER_CTX, method, trial)


def run_experiment(cfg: ExperimentConfig, out_dir=None, jobs: int = 1, verbose: bool = False) -> ExperimentResult:
    """Run every configured method for ``cfg.trials`` trials.

    A failing trial is recorded in the trace's ``errors`` and the experiment
    continues. With ``out_dir`` the CSV files and ``summary.json`` are written
    (atomically) under ``out_dir/cfg.name``. ``jobs > 1`` spreads trials over
    a process pool; results do not depend on it.
    """
    start = time.perf_counter()
    ctx = _Context(cfg)
    names = _method_names(cfg)
    tasks = [(m, t) for m in names for t in range(cfg.trials)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(cfg,)) as pool:
            outcomes = list(pool.map(_pool_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        outcomes = []
        for m, t in tasks:
            progress = None
            if verbose:
                def progress(l, z, best, _m=m, _t=t):
                    log.info("%s %d %d %.6g", _m, _t, l, best)
            outcomes.append(_safe_trial(ctx, m, t, progress))
    traces = {}
    for (m, t), (trace, est, err) in zip(tasks, outcomes):
        tr = traces.setdefault(m, RegretTrace(m, np.full((cfg.trials, cfg.L), np.nan)))
        if err is not None:
            tr.errors[t] = err
            log.warning("%s trial %d failed: %s", m, t, err)
            continue
        tr.values[t] = trace
        if est is not None:
            tr.estimates[t] = est
    result = ExperimentResult(cfg, traces, time.perf_counter() - start, ctx.extras())
    if out_dir is not None:
        result.write(out_dir)
    return result
