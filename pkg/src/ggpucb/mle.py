"""Grid maximum-likelihood estimation of GGP hyperparameters.

The data model treats the observations as the GGP observed at the query
indices plus Gaussian noise, ``Y ~ N(0, A C A^T + sigma^2 I)`` where ``A``
selects the queried rows. Matérn fits estimate ``s`` with ``kappa`` held
fixed (default 1); SE fits estimate ``tau``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import EstimationError, NumericalError
from .ggp import MATERN, KernelSpec, SpectralCovariance, spectral_coefficients
from .graph import GraphSpectrum
from .posterior import jittered_cholesky

LOG_2PI = np.log(2 * np.pi)


def default_grid(family: str) -> np.ndarray:
    """25 log-spaced values: ``s`` in [1, 10] or ``tau`` in [0.01, 1]."""
    if family == MATERN:
        return np.geomspace(1.0, 10.0, 25)
    return np.geomspace(0.01, 1.0, 25)


@dataclass
class MleProblem:
    """Observations at cloud indices plus the eigenpairs defining the GGP family.

    ``base_spec`` fixes the family, ``m``, the truncation and (for Matérn)
    ``kappa``; only ``s`` or ``tau`` varies over ``grid``.
    """

    spectrum: GraphSpectrum
    base_spec: KernelSpec
    queries: np.ndarray
    observations: np.ndarray
    noise_sd: float
    grid: np.ndarray = field(default=None)

    def __post_init__(self):
        self.queries = np.asarray(self.queries, dtype=np.intp).ravel()
        self.observations = np.asarray(self.observations, dtype=float).ravel()
        if self.queries.size < 1 or self.queries.size != self.observations.size:
            raise ValueError("need at least one query and one observation per query")
        if self.grid is None:
            self.grid = default_grid(self.base_spec.family)
        self.grid = np.sort(np.asarray(self.grid, dtype=float).ravel())
        if self.grid.size == 0 or np.any(self.grid <= 0):
            raise ValueError("grid must be nonempty with positive entries")
        k = self.base_spec.k or self.spectrum.k
        self._lam = self.spectrum.eigenvalues[:k]
        self._psi_q = self.spectrum.eigenvectors[self.queries, :k]

    def spec_at(self, theta: float) -> KernelSpec:
        key = "s" if self.base_spec.family == MATERN else "tau"
        return self.base_spec.with_params(**{key: float(theta)})

    def prior_gram(self, theta: float) -> np.ndarray:
        """``A C_theta A^T``, the prior covariance of the GGP at the queries."""
        w = spectral_coefficients(self.spec_at(theta), self._lam)
        return (self._psi_q * w) @ self._psi_q.T

    def covariance(self, theta: float) -> np.ndarray:
        """``Sigma_theta = A C_theta A^T + sigma^2 I``."""
        S = self.prior_gram(theta)
        return S + self.noise_sd**2 * np.eye(S.shape[0])


def negative_log_likelihood(problem: MleProblem, theta: float) -> float:
    """``0.5 * (Y^T Sigma^-1 Y + log det Sigma + l log 2 pi)``."""
    if not theta > 0:
        raise ValueError("theta must be positive")
    L, _ = jittered_cholesky(problem.prior_gram(theta), problem.noise_sd**2)
    alpha = scipy.linalg.solve_triangular(L, problem.observations, lower=True, check_finite=False)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    return float(0.5 * (alpha @ alpha + logdet + problem.observations.size * LOG_2PI))


def nll_profile(problem: MleProblem) -> np.ndarray:
    """Negative log-likelihood at every grid point (``nan`` where it fails)."""
    out = np.full(problem.grid.size, np.nan)
    for i, th in enumerate(problem.grid):
        try:
            out[i] = negative_log_likelihood(problem, th)
        except NumericalError:
            pass
    return out


def estimate(problem: MleProblem) -> float:
    """Grid minimizer of the negative log-likelihood; ties go to the smallest value."""
    prof = nll_profile(problem)
    if np.all(np.isnan(prof)):
        raise EstimationError("negative log-likelihood failed at every grid point")
    return float(problem.grid[int(np.nanargmin(prof))])


class MleRefit:
    """Callable for :func:`ggpucb.acquisition.run_ucb` that refits by grid MLE.

    Each call re-estimates ``s`` (or ``tau``) from the data so far and
    returns the corresponding graph GP.
    """

    def __init__(self, spectrum: GraphSpectrum, base_spec: KernelSpec, noise_sd: float, grid=None):
        self.spectrum = spectrum
        self.base_spec = base_spec
        self.noise_sd = noise_sd
        self.grid = default_grid(base_spec.family) if grid is None else np.asarray(grid, dtype=float)
        k = base_spec.k or spectrum.k
        self._lam = spectrum.eigenvalues[:k]
        self._vecs = spectrum.eigenvectors[:, :k]

    def __call__(self, queries, observations) -> SpectralCovariance:
        prob = MleProblem(self.spectrum, self.base_spec, queries, observations, self.noise_sd, self.grid)
        spec = prob.spec_at(estimate(prob))
        return SpectralCovariance(spec, self._lam, self._vecs)
