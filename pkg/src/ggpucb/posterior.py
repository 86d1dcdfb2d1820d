"""Exact GP conditioning over a point cloud."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import NumericalError
from .ggp import CovarianceModel

JITTER_START = 1e-10
JITTER_MAX = 1e-6


def jittered_cholesky(K, noise_var=0.0):
    """Lower Cholesky factor of ``K + noise_var I`` with jitter escalation.

    With ``noise_var == 0`` a relative jitter of ``1e-10`` times the mean
    diagonal is added from the start, since low-rank spectral kernels give
    exactly singular Gram matrices. On failure the jitter grows tenfold up to
    ``1e-6``; after that :class:`NumericalError` is raised.

    Returns ``(L, jitter)`` where ``jitter`` is the absolute amount added.
    """
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if n == 0:
        return np.zeros((0, 0)), 0.0
    scale = float(np.trace(K)) / n
    if scale <= 0:
        scale = 1.0
    A = K + noise_var * np.eye(n)
    rel = 0.0 if noise_var > 0 else JITTER_START
    while True:
        jitter = rel * scale
        try:
            L = scipy.linalg.cholesky(A + jitter * np.eye(n), lower=True, check_finite=False)
            return L, jitter
        except np.linalg.LinAlgError:
            pass
        if rel >= JITTER_MAX:
            raise NumericalError(
                f"Cholesky failed for a {n}x{n} Gram matrix even with relative jitter {rel:g}"
            )
        rel = JITTER_START if rel == 0 else rel * 10


class PosteriorState:
    """Posterior of a zero-mean GP given noisy values at cloud indices.

    Built by :func:`condition`. Mean and variance over the whole cloud are
    computed once on first use and cached; the state is otherwise immutable.
    """

    def __init__(self, model: CovarianceModel, queries, observations, noise_sd):
        q = np.asarray(queries, dtype=np.intp).ravel()
        y = np.asarray(observations, dtype=float).ravel()
        if q.size != y.size:
            raise ValueError(f"{q.size} queries but {y.size} observations")
        if not np.all(np.isfinite(y)):
            raise ValueError("observations must be finite")
        if not noise_sd >= 0:
            raise ValueError("noise_sd must be nonnegative")
        model._check(q)
        self.model = model
        self.queries = q
        self.observations = y
        self.noise_sd = float(noise_sd)
        self.chol, self.jitter = jittered_cholesky(
            model.covariance_matrix(q) if q.size else np.zeros((0, 0)), self.noise_sd**2
        )
        self.alpha = scipy.linalg.cho_solve((self.chol, True), y) if q.size else np.zeros(0)
        self._mean = None
        self._var = None

    @property
    def size(self) -> int:
        return self.queries.size

    def _compute(self, idx):
        prior = self.model.prior_variance()[idx]
        if self.size == 0:
            return np.zeros(idx.size), prior.copy()
        Kxq = self.model.covariance_matrix(idx, self.queries)
        mu = Kxq @ self.alpha
        V = scipy.linalg.solve_triangular(self.chol, Kxq.T, lower=True, check_finite=False)
        var = prior - np.einsum("ij,ij->j", V, V)
        return mu, np.maximum(var, 0.0)

    def _full(self):
        if self._mean is None:
            mu, var = self._compute(np.arange(self.model.n))
            mu.setflags(write=False)
            var.setflags(write=False)
            self._mean, self._var = mu, var
        return self._mean, self._var

    def mean_all(self) -> np.ndarray:
        return self._full()[0]

    def var_all(self) -> np.ndarray:
        return self._full()[1]

    def std_all(self) -> np.ndarray:
        return np.sqrt(self.var_all())

    def mean(self, z: int) -> float:
        self.model._check([z])
        return float(self.mean_all()[z])

    def variance(self, z: int) -> float:
        self.model._check([z])
        return float(self.var_all()[z])

    def std(self, z: int) -> float:
        return float(np.sqrt(self.variance(z)))


def condition(model: CovarianceModel, queries, observations, noise_sd: float) -> PosteriorState:
    """Condition ``model`` on ``observations`` at cloud indices ``queries``.

    ``queries`` may be empty, giving the prior.
    """
    return PosteriorState(model, queries, observations, noise_sd)
