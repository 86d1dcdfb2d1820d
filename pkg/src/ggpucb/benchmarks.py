"""Objective functions for the circle, two-scale manifold and heat-source experiments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma, kv

from .ggp import CovarianceModel, SpectralCovariance, SphereEigenTable
from .graph import EMPIRICAL_L2, GraphSpectrum
from .point_cloud import PointCloud, angles

F_CAP = 1e12


# --- circle benchmark functions (minimization form, theta in [-pi, pi)) -------

def levy(theta):
    theta = np.asarray(theta, dtype=float)
    return (3 * theta / 4) ** 2 * (1 + np.sin(np.pi * (3 * theta + 3) / 2) ** 2)


def ackley(theta):
    # taken literally: the linear term is exp(-0.1 theta), not exp(-0.1 |theta|)
    theta = np.asarray(theta, dtype=float)
    return -20 * np.exp(-0.1 * theta) - np.exp(np.cos(2 * np.pi * theta)) + 20 + np.e


def rastrigin(theta):
    theta = np.asarray(theta, dtype=float)
    return 2 + theta**2 - 2 * np.cos(2 * np.pi * theta)


CIRCLE_FUNCTIONS = {"levy": levy, "ackley": ackley, "rastrigin": rastrigin}


def circle_benchmark(cloud: PointCloud, name: str) -> np.ndarray:
    """Negated benchmark ``-f(theta_i)`` at every cloud point, ready for maximization."""
    try:
        fn = CIRCLE_FUNCTIONS[name]
    except KeyError:
        raise ValueError(f"unknown circle benchmark {name!r}; choose from {sorted(CIRCLE_FUNCTIONS)}") from None
    return -fn(angles(cloud))


def noise_sd_rule(values, fraction: float = 0.05) -> float:
    """Noise level ``fraction * ||f||_2 / sqrt(N)`` (roughly 5% of the RMS value)."""
    v = np.asarray(values, dtype=float)
    return float(fraction * np.linalg.norm(v) / np.sqrt(v.size))


def sampled_truth(model: SpectralCovariance, seed=None, restrict_to=None) -> np.ndarray:
    """A prior draw used as a lookup-table objective.

    ``restrict_to`` is an index array into the model's cloud (for instance a
    subsample's ``labels``); the draw happens on the full cloud and is then
    restricted, so values at shared points agree exactly.
    """
    values = model.sample_prior(seed)
    if restrict_to is not None:
        values = values[np.asarray(restrict_to, dtype=np.intp)]
    return values


# --- Euclidean (ambient-space) kernels ----------------------------------------

def matern_correlation(r, nu: float, kappa: float, closed_form: bool = True) -> np.ndarray:
    """``2^(1-nu)/Gamma(nu) (kappa r)^nu K_nu(kappa r)``, equal to 1 at ``r = 0``."""
    x = kappa * np.asarray(r, dtype=float)
    if closed_form and nu in (0.5, 1.5, 2.5):
        e = np.exp(-x)
        if nu == 0.5:
            return e
        if nu == 1.5:
            return (1 + x) * e
        return (1 + x + x**2 / 3) * e
    out = np.ones_like(x)
    pos = x > 0
    xp = x[pos]
    out[pos] = 2 ** (1 - nu) / gamma(nu) * xp**nu * kv(nu, xp)
    return out


class EuclideanKernelModel(CovarianceModel):
    """Stationary kernel on ambient Euclidean distances between cloud points.

    ``family="matern"`` uses ``nu`` and ``kappa``; ``family="se"`` uses
    ``exp(-|x - y|^2 / (4 tau))``. Both have unit prior variance.
    """

    def __init__(self, cloud: PointCloud, family: str, nu=None, kappa=None, tau=None):
        if family == "matern":
            if not (nu and nu > 0 and kappa and kappa > 0):
                raise ValueError("Matérn kernel needs positive nu and kappa")
        elif family == "se":
            if not (tau and tau > 0):
                raise ValueError("SE kernel needs positive tau")
        else:
            raise ValueError(f"unknown family {family!r}")
        self.points = cloud.points
        self.family = family
        self.nu, self.kappa, self.tau = nu, kappa, tau
        self.n = cloud.n

    def _kernel(self, r):
        if self.family == "matern":
            return matern_correlation(r, self.nu, self.kappa)
        return np.exp(-(r**2) / (4 * self.tau))

    def covariance_matrix(self, rows, cols=None):
        r = self._check(rows)
        c = r if cols is None else self._check(cols)
        A, B = self.points[r], self.points[c]
        sq = (A**2).sum(1)[:, None] + (B**2).sum(1)[None, :] - 2 * A @ B.T
        D = np.sqrt(np.maximum(sq, 0.0))
        if cols is None:
            np.fill_diagonal(D, 0.0)
        return self._kernel(D)

    def prior_variance(self):
        return np.ones(self.n)


def euclidean_kernel_model(cloud: PointCloud, family: str, **params) -> EuclideanKernelModel:
    return EuclideanKernelModel(cloud, family, **params)


# --- heat-source detection on the sphere --------------------------------------

@dataclass(eq=False)
class HeatProblem:
    """Noisy heat measurements on a sphere cloud plus the graph forward model.

    ``data`` is generated from the analytic spherical-harmonic expansion;
    ``spectrum`` (graph eigenpairs) defines the approximate forward map used
    by :func:`heat_objective`.
    """

    cloud: PointCloud
    spectrum: GraphSpectrum
    table: SphereEigenTable
    zeta: float
    z_star: int
    t: float
    data: np.ndarray
    clean_data: np.ndarray
    noise_sd: float
    eigenvalue_scale: float = 1.0

    def __post_init__(self):
        spec = self.spectrum.renormalized(EMPIRICAL_L2)
        self._psi = np.asarray(spec.eigenvectors)
        self._decay = np.exp(-self.eigenvalue_scale * spec.eigenvalues * self.t)

    @property
    def n(self) -> int:
        return self.cloud.n

    def initial_heat(self, z: int) -> np.ndarray:
        """``exp(zeta <x_z, x_j>)`` for every cloud point ``x_j``."""
        return np.exp(self.zeta * self.cloud.points @ self.cloud.points[z])

    def forward(self, z: int) -> np.ndarray:
        """Graph forward map: heat at time ``t`` from a source centred at point ``z``."""
        phi0 = self.initial_heat(z)
        coef = self._psi.T @ phi0 / self.n
        return self._psi @ (coef * self._decay)

    def forward_all(self, chunk: int = 512):
        """Yield ``(start, G)`` with ``G[:, j]`` the forward map for source ``start + j``."""
        X = self.cloud.points
        for start in range(0, self.n, chunk):
            Phi0 = np.exp(self.zeta * X @ X[start : start + chunk].T)
            C = self._psi.T @ Phi0 / self.n
            yield start, self._psi @ (C * self._decay[:, None])


def _neg_log(res):
    res = np.asarray(res, dtype=float)
    with np.errstate(divide="ignore"):
        out = -np.log(res)
    return np.minimum(out, F_CAP)


def make_heat_problem(cloud: PointCloud, zeta: float, z_star: int, t: float, noise_sd: float,
                      spectrum: GraphSpectrum, l_max: int = 5, seed=None,
                      eigenvalue_scale: float = 1.0) -> HeatProblem:
    """Generate heat data at time ``t`` for a source at cloud point ``z_star``.

    The clean field is the spherical-harmonic expansion up to degree
    ``l_max`` with coefficients from Monte Carlo quadrature over the cloud,
    ``(1/N) sum_j phi0(x_j) Y(x_j)``; Gaussian noise of standard deviation
    ``noise_sd`` is added.

    ``eigenvalue_scale`` multiplies the graph eigenvalues inside the forward
    map. The unnormalized graph Laplacian approximates ``-Delta / vol(M)``, so
    passing ``vol(S^2) = 4 pi`` puts graph and analytic diffusion on the same
    clock; the default 1 uses raw eigenvalues.
    """
    norms = np.linalg.norm(cloud.points, axis=1)
    if cloud.ambient_dim != 3 or np.max(np.abs(norms - 1)) > 1e-8:
        raise ValueError("heat problem needs a cloud of unit vectors in R^3")
    if t < 0:
        raise ValueError("observation time must be nonnegative")
    if not zeta > 0:
        raise ValueError("concentration zeta must be positive")
    if not 0 <= z_star < cloud.n:
        raise IndexError("source index out of range")
    if spectrum.n != cloud.n:
        raise ValueError("spectrum does not match the cloud")
    table = SphereEigenTable(l_max)
    Y = table.evaluate(cloud.points)
    phi0 = np.exp(zeta * cloud.points @ cloud.points[z_star])
    coef = Y.T @ phi0 / cloud.n
    clean = Y @ (coef * np.exp(-table.eigenvalues * t))
    data = clean + noise_sd * np.random.default_rng(seed).standard_normal(cloud.n)
    return HeatProblem(cloud, spectrum, table, float(zeta), int(z_star), float(t), data, clean,
                       float(noise_sd), float(eigenvalue_scale))


def heat_objective(problem: HeatProblem, z: int) -> float:
    """``-log ||d - G_N(z)||_inf``, capped at ``1e12`` for an exact match."""
    if not 0 <= z < problem.n:
        raise IndexError("point index out of range")
    return float(_neg_log(np.max(np.abs(problem.data - problem.forward(z)))))


def heat_objective_all(problem: HeatProblem) -> np.ndarray:
    """:func:`heat_objective` at every cloud point (exhaustive scan)."""
    out = np.empty(problem.n)
    for start, G in problem.forward_all():
        out[start : start + G.shape[1]] = np.max(np.abs(problem.data[:, None] - G), axis=0)
    return _neg_log(out)


def attainable_discrepancy(problem: HeatProblem, values=None) -> float:
    """Euclidean distance from the true source to the maximizer of the approximate objective."""
    if values is None:
        values = heat_objective_all(problem)
    best = int(np.argmax(values))
    return float(np.linalg.norm(problem.cloud.points[best] - problem.cloud.points[problem.z_star]))


OBJECTIVES = {
    "levy": "negated Levy function on the unit circle",
    "ackley": "negated Ackley function on the unit circle",
    "rastrigin": "negated Rastrigin function on the unit circle",
    "circle-matern": "Matérn manifold-GP sample on the unit circle",
    "circle-se": "SE manifold-GP sample on the unit circle",
    "manifold-matern": "Matérn GGP sample on a fine cloud, optimized on a coarse subsample",
    "manifold-se": "SE GGP sample on a fine cloud, optimized on a coarse subsample",
    "heat": "heat-source detection on the unit sphere",
}
