"""Upper-confidence-bound acquisition and the GGP-UCB optimization loop."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ExhaustionError
from .ggp import CovarianceModel
from .posterior import PosteriorState, condition

THEORETICAL = "theoretical"
EMPIRICAL = "empirical"


@dataclass(frozen=True)
class UcbConfig:
    """Settings for the exploration weight ``B`` and candidate selection.

    Attributes
    ----------
    mode : {"empirical", "theoretical"}
    delta : float
        Confidence level in (0, 1).
    a : float
        Multiplier of the plain UCB schedule in empirical mode.
    epsilon : float
        Misspecification budget (theoretical mode), in objective units.
    exclude_visited : bool
        Never propose a point that was already queried.
    recommend : {"observed", "mean"}
        Final recommendation: query with the largest observation, or query
        with the largest final posterior mean.
    acquisition_subsample : int or None
        If set, each iteration scans only this many seeded random candidates.
    """

    mode: str = EMPIRICAL
    delta: float = 0.1
    a: float = 0.5
    epsilon: float = 0.0
    exclude_visited: bool = True
    recommend: str = "observed"
    acquisition_subsample: int | None = None

    def __post_init__(self):
        if self.mode not in (EMPIRICAL, THEORETICAL):
            raise ValueError(f"mode must be {EMPIRICAL!r} or {THEORETICAL!r}, got {self.mode!r}")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.mode == EMPIRICAL and not self.a > 0:
            raise ValueError("a must be positive")
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be nonnegative")
        if self.recommend not in ("observed", "mean"):
            raise ValueError("recommend must be 'observed' or 'mean'")


@dataclass
class RunRecord:
    """Trace of one optimization run.

    ``queries[l-1]``, ``observations[l-1]``, ``betas[l-1]`` and
    ``acquisition_values[l-1]`` belong to iteration ``l``. The seeded starting
    point, when the method has one, is kept in ``initial_query`` and is
    observed before iteration 1.
    """

    queries: np.ndarray
    observations: np.ndarray
    betas: np.ndarray
    acquisition_values: np.ndarray
    recommendation: int
    initial_query: int | None = None
    initial_observation: float | None = None
    estimates: np.ndarray | None = None
    method: str = ""

    @property
    def L(self) -> int:
        return self.queries.size

    def evaluated(self) -> np.ndarray:
        """Every observed index in order, starting point first."""
        if self.initial_query is None:
            return self.queries.copy()
        return np.concatenate([[self.initial_query], self.queries])

    def all_observations(self) -> np.ndarray:
        if self.initial_query is None:
            return self.observations.copy()
        return np.concatenate([[self.initial_observation], self.observations])

    def best_so_far(self) -> np.ndarray:
        """Largest observation among the start and the first ``l`` queries, per ``l``."""
        best = np.maximum.accumulate(self.observations)
        if self.initial_query is not None:
            best = np.maximum(best, self.initial_observation)
        return best

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "query_index", "observation", "B", "best_so_far"])
        if self.initial_query is not None:
            w.writerow([0, int(self.initial_query), repr(float(self.initial_observation)), "",
                        repr(float(self.initial_observation))])
        for l, (z, y, b, best) in enumerate(
            zip(self.queries, self.observations, self.betas, self.best_so_far()), start=1
        ):
            w.writerow([l, int(z), repr(float(y)), repr(float(b)), repr(float(best))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "RunRecord":
        rows = list(csv.DictReader(io.StringIO(text)))
        init = [r for r in rows if int(r["iteration"]) == 0]
        body = [r for r in rows if int(r["iteration"]) > 0]
        q = np.array([int(r["query_index"]) for r in body], dtype=np.intp)
        y = np.array([float(r["observation"]) for r in body])
        b = np.array([float(r["B"]) if r["B"] else np.nan for r in body])
        rec = cls(q, y, b, np.full(q.size, np.nan), recommendation=-1)
        if init:
            rec.initial_query = int(init[0]["query_index"])
            rec.initial_observation = float(init[0]["observation"])
        ev, obs = rec.evaluated(), rec.all_observations()
        rec.recommendation = int(ev[np.argmax(obs)]) if ev.size else -1
        return rec


def beta(config: UcbConfig, l: int, n: int, noise_sd: float = 0.0) -> float:
    """Exploration weight ``B`` at iteration ``l`` for a cloud of ``n`` points.

    Empirical mode: ``a * sqrt(2 log(pi^2 l^2 n / (6 delta)))``. Theoretical
    mode adds the misspecification correction
    ``epsilon * sqrt(l - 1) / (delta * noise_sd)`` to the unscaled root term.
    """
    if l < 1:
        raise ValueError("iteration index must be >= 1")
    if n < 2:
        raise ValueError("cloud size must be >= 2")
    root = math.sqrt(2 * math.log(math.pi**2 * l**2 * n / (6 * config.delta)))
    if config.mode == EMPIRICAL:
        return config.a * root
    if config.epsilon == 0 or l == 1:
        return root
    if not noise_sd > 0:
        raise ValueError("theoretical B with epsilon > 0 needs a positive noise_sd")
    return root + config.epsilon * math.sqrt(l - 1) / (config.delta * noise_sd)


def select_next(state: PosteriorState, B: float, excluded=(), candidates=None):
    """Index maximizing ``mean + B * std`` over admissible points.

    Admissible points are ``candidates`` (default: the whole cloud) minus
    ``excluded``. Ties go to the lowest index. Returns ``(index, value)``.
    """
    acq = state.mean_all() + B * state.std_all()
    mask = np.ones(acq.size, dtype=bool)
    if candidates is not None:
        mask[:] = False
        mask[np.asarray(candidates, dtype=np.intp)] = True
    excl = np.fromiter(excluded, dtype=np.intp) if not isinstance(excluded, np.ndarray) else excluded
    if excl.size:
        mask[excl] = False
    if not mask.any():
        raise ExhaustionError("every candidate point has been excluded")
    masked = np.where(mask, acq, -np.inf)
    z = int(np.argmax(masked))
    if not mask[z]:
        # all admissible values are -inf/nan; fall back to the lowest admissible index
        z = int(np.flatnonzero(mask)[0])
    return z, float(acq[z])


def _lookup(objective):
    if callable(objective):
        return objective
    table = np.asarray(objective, dtype=float)
    return lambda z: float(table[z])


ModelRefit = Callable[[np.ndarray, np.ndarray], CovarianceModel]


def run_ucb(model: CovarianceModel, objective, noise_sd: float, L: int,
            config: UcbConfig = UcbConfig(), seed=None, refit: ModelRefit | None = None,
            refit_every: int = 1, progress: Callable | None = None) -> RunRecord:
    """Run ``L`` iterations of GP-UCB on the cloud indexed by ``model``.

    The starting point is uniform on the cloud and observed first; each
    iteration then conditions on everything observed so far, picks the next
    point by :func:`select_next` and observes it. Observations are
    ``objective(z) + noise_sd * N(0, 1)`` using the run's seeded generator.

    ``refit(queries, observations)``, when given, returns the covariance
    model to use for the coming iteration (e.g. a maximum-likelihood fit);
    it is called every ``refit_every`` iterations and its
    ``spec.theta`` is recorded in ``RunRecord.estimates``.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    n = model.n
    if config.exclude_visited and L >= n:
        raise ExhaustionError(f"L={L} iterations need {L + 1} distinct points but the cloud has {n}")
    f = _lookup(objective)
    rng = np.random.default_rng(seed)
    z0 = int(rng.integers(n))
    y0 = f(z0) + noise_sd * rng.standard_normal()
    Q, Y = [z0], [y0]
    betas, acqs, estimates = [], [], []
    current = model
    for l in range(1, L + 1):
        if refit is not None and (l - 1) % refit_every == 0:
            current = refit(np.asarray(Q), np.asarray(Y))
        if refit is not None:
            estimates.append(current.spec.theta)
        state = condition(current, Q, Y, noise_sd)
        B = beta(config, l, n, noise_sd)
        cand = None
        if config.acquisition_subsample is not None and config.acquisition_subsample < n:
            cand = rng.choice(n, size=config.acquisition_subsample, replace=False)
        excluded = np.asarray(Q, dtype=np.intp) if config.exclude_visited else ()
        try:
            z, a = select_next(state, B, excluded, cand)
        except ExhaustionError:
            if cand is None:
                raise
            z, a = select_next(state, B, excluded)
        y = f(z) + noise_sd * rng.standard_normal()
        Q.append(z)
        Y.append(y)
        betas.append(B)
        acqs.append(a)
        if progress is not None:
            progress(l, z, max(Y))
    Qa, Ya = np.asarray(Q, dtype=np.intp), np.asarray(Y, dtype=float)
    if config.recommend == "observed":
        rec = int(Qa[np.argmax(Ya)])
    else:
        mu = condition(current, Qa, Ya, noise_sd).mean_all()[Qa]
        rec = int(Qa[np.argmax(mu)])
    return RunRecord(
        queries=Qa[1:], observations=Ya[1:], betas=np.asarray(betas),
        acquisition_values=np.asarray(acqs), recommendation=rec,
        initial_query=z0, initial_observation=float(y0),
        estimates=np.asarray(estimates) if refit is not None else None,
    )


def random_search_baseline(objective, n: int, L: int, seed=None, noise_sd: float = 0.0) -> RunRecord:
    """``L`` distinct uniformly random queries on a cloud of ``n`` points."""
    if L > n:
        raise ExhaustionError(f"cannot draw {L} distinct points from a cloud of {n}")
    if L < 1:
        raise ValueError("L must be >= 1")
    f = _lookup(objective)
    rng = np.random.default_rng(seed)
    q = rng.permutation(n)[:L].astype(np.intp)
    y = np.array([f(int(z)) for z in q]) + noise_sd * rng.standard_normal(L)
    return RunRecord(
        queries=q, observations=y, betas=np.full(L, np.nan), acquisition_values=np.full(L, np.nan),
        recommendation=int(q[np.argmax(y)]),
    )
