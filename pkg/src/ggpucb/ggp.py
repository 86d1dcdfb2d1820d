"""Graph Gaussian process priors and analytic manifold-GP oracles.

A spectral covariance has the form

    c(x_i, x_j) = sum_r w_r psi_r(x_i) psi_r(x_j)

with Matérn coefficients ``w_r = kappa^(2s-m) (kappa^2 + lambda_r)^(-s)`` or
squared-exponential coefficients ``w_r = tau^(m/2) exp(-lambda_r tau)``.
The eigenpairs come either from a graph Laplacian (the GGP) or from the
Laplace-Beltrami operator of the circle or sphere (oracles used for
baselines and data generation).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import factorial

import numpy as np
from scipy.special import lpmv

from .graph import EMPIRICAL_L2, GraphSpectrum
from .point_cloud import PointCloud, angles

MATERN = "matern"
SE = "se"


@dataclass(frozen=True)
class KernelSpec:
    """Parameters of a spectral Matérn or SE prior.

    ``k`` is the truncation level (number of eigenpairs kept); ``None`` means
    use every eigenpair supplied. ``amplitude`` multiplies every coefficient
    and defaults to 1, i.e. no separate signal variance.
    """

    family: str
    m: int
    kappa: float | None = None
    s: float | None = None
    tau: float | None = None
    k: int | None = None
    amplitude: float = 1.0

    def __post_init__(self):
        if self.family == MATERN:
            if not (self.kappa and self.kappa > 0 and self.s and self.s > 0):
                raise ValueError("Matérn spec needs positive kappa and s")
        elif self.family == SE:
            if not (self.tau and self.tau > 0):
                raise ValueError("SE spec needs positive tau")
        else:
            raise ValueError(f"family must be {MATERN!r} or {SE!r}, got {self.family!r}")
        if self.m < 1:
            raise ValueError("intrinsic dimension must be >= 1")
        if self.k is not None and self.k < 1:
            raise ValueError("truncation k must be >= 1")
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")

    @classmethod
    def matern(cls, kappa, s, m, k=None, amplitude=1.0):
        return cls(MATERN, m, kappa=float(kappa), s=float(s), k=k, amplitude=amplitude)

    @classmethod
    def se(cls, tau, m, k=None, amplitude=1.0):
        return cls(SE, m, tau=float(tau), k=k, amplitude=amplitude)

    def with_params(self, **kw) -> "KernelSpec":
        return replace(self, **kw)

    @property
    def theta(self) -> float:
        """The scalar usually estimated: ``s`` for Matérn, ``tau`` for SE."""
        return self.s if self.family == MATERN else self.tau


def spectral_coefficients(spec: KernelSpec, eigenvalues) -> np.ndarray:
    lam = np.asarray(eigenvalues, dtype=float)
    m = spec.m
    if spec.family == MATERN:
        k2 = spec.kappa**2
        w = np.exp((2 * spec.s - m) * np.log(spec.kappa) - spec.s * np.log(k2 + lam))
    else:
        w = spec.tau ** (m / 2) * np.exp(-lam * spec.tau)
    return spec.amplitude * w


class CovarianceModel:
    """A zero-mean Gaussian prior over the ``n`` points of a cloud.

    Subclasses implement :meth:`covariance_matrix` and :meth:`prior_variance`.
    """

    n: int

    def covariance_matrix(self, rows, cols=None) -> np.ndarray:
        raise NotImplementedError

    def prior_variance(self) -> np.ndarray:
        """``c(x_i, x_i)`` for every point of the cloud."""
        raise NotImplementedError

    def covariance(self, i: int, j: int) -> float:
        self._check([i, j])
        return float(self.covariance_matrix([i], [j])[0, 0])

    def _check(self, idx):
        idx = np.asarray(idx, dtype=np.intp).ravel()
        if idx.size and (idx.min() < 0 or idx.max() >= self.n):
            raise IndexError(f"point index out of range for cloud of size {self.n}")
        return idx


class SpectralCovariance(CovarianceModel):
    """Covariance ``sum_r w_r psi_r psi_r^T`` from a table of eigenpairs.

    Parameters
    ----------
    spec : KernelSpec
    eigenvalues : array, shape (k,)
    eigenvectors : array, shape (n, k)
        Eigenfunctions evaluated at the cloud points.
    """

    def __init__(self, spec: KernelSpec, eigenvalues, eigenvectors):
        lam = np.asarray(eigenvalues, dtype=float)
        vecs = np.asarray(eigenvectors, dtype=float)
        k = lam.size if spec.k is None else spec.k
        if k > lam.size:
            raise ValueError(f"truncation k={k} exceeds the {lam.size} eigenpairs supplied")
        self.spec = spec
        self.eigenvalues = lam[:k]
        self.eigenvectors = vecs[:, :k]
        self.coefficients = spectral_coefficients(spec, self.eigenvalues)
        self.features = self.eigenvectors * np.sqrt(self.coefficients)
        self.n = vecs.shape[0]
        self._diag = np.einsum("ij,ij->i", self.features, self.features)

    @property
    def k(self) -> int:
        return self.eigenvalues.size

    def covariance_matrix(self, rows, cols=None):
        r = self._check(rows)
        Fr = self.features[r]
        if cols is None:
            return Fr @ Fr.T
        return Fr @ self.features[self._check(cols)].T

    def prior_variance(self):
        return self._diag

    def with_spec(self, spec: KernelSpec) -> "SpectralCovariance":
        """Same eigenpairs, different kernel parameters."""
        return SpectralCovariance(spec, self.eigenvalues, self.eigenvectors)

    def sample_prior(self, seed=None, size=None) -> np.ndarray:
        """Draw ``sum_r sqrt(w_r) xi_r psi_r`` with standard normal ``xi``.

        Returns shape ``(n,)`` or ``(size, n)``.
        """
        rng = np.random.default_rng(seed)
        if size is None:
            return self.features @ rng.standard_normal(self.k)
        return rng.standard_normal((size, self.k)) @ self.features.T


def graph_gp(spectrum: GraphSpectrum, spec: KernelSpec) -> SpectralCovariance:
    """Matérn or SE graph GP built on raw graph-Laplacian eigenpairs."""
    return SpectralCovariance(spec, spectrum.eigenvalues, spectrum.eigenvectors)


def sample_prior(model: SpectralCovariance, seed=None) -> np.ndarray:
    return model.sample_prior(seed)


# --- circle -----------------------------------------------------------------

def circle_eigenpairs(theta, K: int):
    """First ``K`` Laplace-Beltrami eigenpairs of the unit circle at angles ``theta``.

    Ordered ``1, sqrt2 cos t, sqrt2 sin t, sqrt2 cos 2t, ...`` with eigenvalues
    ``0, 1, 1, 4, 4, ...``; normalized in L2 of the uniform probability measure.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    theta = np.asarray(theta, dtype=float)
    freq = (np.arange(K) + 1) // 2
    vals = freq.astype(float) ** 2
    funcs = np.empty((theta.size, K))
    funcs[:, 0] = 1.0
    for j in range(1, K):
        trig = np.cos if j % 2 == 1 else np.sin
        funcs[:, j] = np.sqrt(2.0) * trig(freq[j] * theta)
    return vals, funcs


def circle_oracle(cloud: PointCloud, K: int, spec: KernelSpec) -> SpectralCovariance:
    """Manifold GP on the unit circle, evaluated at the points of ``cloud``."""
    vals, funcs = circle_eigenpairs(angles(cloud), K)
    return SpectralCovariance(spec.with_params(k=K), vals, funcs)


# --- sphere -----------------------------------------------------------------

class SphereEigenTable:
    """Real spherical harmonics up to degree ``l_max``.

    Eigenvalues ``l(l+1)`` each appear ``2l+1`` times. Harmonics are
    normalized in L2 of the uniform probability measure on ``S^2``, so the
    degree-0 harmonic is the constant 1.
    """

    def __init__(self, l_max: int):
        if l_max < 0:
            raise ValueError("l_max must be >= 0")
        self.l_max = int(l_max)
        self.degrees = np.concatenate([np.full(2 * l + 1, l) for l in range(l_max + 1)])
        self.orders = np.concatenate([np.arange(-l, l + 1) for l in range(l_max + 1)])
        self.eigenvalues = (self.degrees * (self.degrees + 1)).astype(float)

    def __len__(self):
        return self.eigenvalues.size

    def evaluate(self, points) -> np.ndarray:
        """Matrix of shape ``(n, len(self))`` of harmonics at unit vectors ``points``."""
        pts = np.asarray(points, dtype=float)
        cos_t = np.clip(pts[:, 2] / np.linalg.norm(pts, axis=1), -1.0, 1.0)
        phi = np.arctan2(pts[:, 1], pts[:, 0])
        out = np.empty((pts.shape[0], len(self)))
        for col, (l, m) in enumerate(zip(self.degrees, self.orders)):
            am = abs(m)
            # 4 pi times the usual area-measure normalization squared
            norm = np.sqrt((2 * l + 1) * factorial(l - am) / factorial(l + am))
            p = lpmv(am, l, cos_t)
            if m == 0:
                out[:, col] = norm * p
            elif m > 0:
                out[:, col] = np.sqrt(2.0) * norm * p * np.cos(am * phi)
            else:
                out[:, col] = np.sqrt(2.0) * norm * p * np.sin(am * phi)
        return out


def sphere_eigenpairs(l_max: int) -> SphereEigenTable:
    return SphereEigenTable(l_max)
