"""Epsilon-neighborhood graphs, unnormalized graph Laplacians and their spectra."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.special import gamma

from .errors import ConnectivityError
from .point_cloud import PointCloud

EUCLIDEAN_UNIT = "euclidean-unit"
EMPIRICAL_L2 = "empirical-L2"
NORMALIZATIONS = (EUCLIDEAN_UNIT, EMPIRICAL_L2)

#: above this size the eigensolver switches from dense to sparse shift-invert
DENSE_LIMIT = 1200
SATURATION_THRESHOLD = 0.02
SATURATION_RUN = 3


def unit_ball_volume(m: int) -> float:
    """Volume of the unit ball in ``R^m``."""
    return float(np.pi ** (m / 2) / gamma(m / 2 + 1))


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Indicator-kernel neighborhood graph.

    ``weights`` is a symmetric CSR matrix whose nonzero entries all equal
    ``coefficient = 2(m+2) / (N nu_m h^(m+2))``; ``W_ij > 0`` iff
    ``|x_i - x_j| < h`` and ``i != j``.
    """

    weights: sp.csr_matrix
    h: float
    coefficient: float
    intrinsic_dim: int

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def n_components(self) -> int:
        return connected_components(self.weights, directed=False)[0]


@dataclass(frozen=True, eq=False)
class GraphSpectrum:
    """The ``k`` smallest eigenpairs of a graph Laplacian.

    ``eigenvectors`` has shape ``(N, k)``; column ``i`` pairs with
    ``eigenvalues[i]``. Columns have Euclidean norm 1 under
    ``"euclidean-unit"`` and ``sqrt(N)`` under ``"empirical-L2"``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    normalization: str = EMPIRICAL_L2
    h: float | None = None

    @property
    def k(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def n(self) -> int:
        return self.eigenvectors.shape[0]

    def truncate(self, k: int) -> "GraphSpectrum":
        if not 1 <= k <= self.k:
            raise ValueError(f"truncation must be in [1, {self.k}], got {k}")
        return GraphSpectrum(self.eigenvalues[:k], self.eigenvectors[:, :k], self.normalization, self.h)

    def renormalized(self, normalization: str) -> "GraphSpectrum":
        _check_normalization(normalization)
        if normalization == self.normalization:
            return self
        factor = np.sqrt(self.n) if normalization == EMPIRICAL_L2 else 1 / np.sqrt(self.n)
        return GraphSpectrum(self.eigenvalues, self.eigenvectors * factor, normalization, self.h)


def _check_normalization(tag):
    if tag not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}, got {tag!r}")


def build_weight_matrix(cloud: PointCloud, h: float) -> WeightedGraph:
    """Connect every pair of distinct points closer than ``h``."""
    if not h > 0:
        raise ValueError(f"connectivity radius must be positive, got {h}")
    n, m = cloud.n, cloud.intrinsic_dim
    coef = 2 * (m + 2) / (n * unit_ball_volume(m) * h ** (m + 2))
    pairs = cKDTree(cloud.points).query_pairs(h, output_type="ndarray")
    if pairs.size:
        # query_pairs uses <= h; the indicator is strict
        d = np.linalg.norm(cloud.points[pairs[:, 0]] - cloud.points[pairs[:, 1]], axis=1)
        pairs = pairs[d < h]
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    W = sp.csr_matrix((np.full(rows.size, coef), (rows, cols)), shape=(n, n))
    W.sort_indices()
    return WeightedGraph(W, float(h), float(coef), m)


def laplacian(graph: WeightedGraph) -> sp.csr_matrix:
    """Unnormalized graph Laplacian ``D - W``."""
    W = graph.weights
    deg = np.asarray(W.sum(axis=1)).ravel()
    L = (sp.diags(deg) - W).tocsr()
    L.sort_indices()
    return L


def _apply_sign_convention(vecs):
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-10)
        if nz.size and col[nz[0]] < 0:
            vecs[:, j] = -col
    return vecs


def _dense_eigs(L, k):
    A = L.toarray() if sp.issparse(L) else np.asarray(L, dtype=float)
    vals, vecs = scipy.linalg.eigh(A, subset_by_index=[0, k - 1])
    return vals, vecs


def _sparse_eigs(L, k):
    n = L.shape[0]
    scale = float(np.abs(L.diagonal()).max()) or 1.0
    v0 = np.random.default_rng(0).standard_normal(n)
    vals, vecs = spla.eigsh(L, k=k, sigma=-1e-3 * scale, which="LM", v0=v0, tol=1e-12)
    return vals, vecs


def spectrum(L, k: int, normalization: str = EMPIRICAL_L2, h: float | None = None,
             check_connected: bool = True) -> GraphSpectrum:
    """The ``k`` algebraically smallest eigenpairs of the Laplacian ``L``.

    Raises :class:`ConnectivityError` when the graph has more than one
    connected component. Dense LAPACK is used up to :data:`DENSE_LIMIT`
    points, sparse shift-invert Lanczos beyond; a sparse result that misses
    the residual bound ``|L psi - lambda psi| <= 1e-8 |psi|`` is recomputed
    densely.
    """
    _check_normalization(normalization)
    n = L.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, N={n}], got {k}")
    if check_connected:
        W = -(sp.csr_matrix(L) - sp.diags(sp.csr_matrix(L).diagonal()))
        ncomp = connected_components(W, directed=False)[0]
        if ncomp > 1:
            raise ConnectivityError(
                f"graph has {ncomp} connected components; increase the connectivity radius h"
            )
    if n <= DENSE_LIMIT or k >= n - 1:
        vals, vecs = _dense_eigs(L, k)
    else:
        vals, vecs = _sparse_eigs(L, k)
        if _max_residual(L, vals, vecs) > 1e-8:
            vals, vecs = _dense_eigs(L, k)
    order = np.argsort(vals, kind="stable")
    vals, vecs = vals[order], np.array(vecs[:, order])
    vecs /= np.linalg.norm(vecs, axis=0)
    vecs = _apply_sign_convention(vecs)
    # clip round-off below zero (PSD operator)
    vals = np.where(np.abs(vals) < 1e-12 * max(1.0, abs(vals[-1])), 0.0, vals)
    if normalization == EMPIRICAL_L2:
        vecs *= np.sqrt(n)
    vals.setflags(write=False)
    vecs.setflags(write=False)
    return GraphSpectrum(vals, vecs, normalization, h)


def _max_residual(L, vals, vecs):
    R = L @ vecs - vecs * vals
    return float(np.max(np.linalg.norm(R, axis=0) / np.linalg.norm(vecs, axis=0)))


def graph_spectrum(cloud: PointCloud, h: float, k: int, normalization: str = EMPIRICAL_L2) -> GraphSpectrum:
    """Convenience pipeline: weights, Laplacian and ``k`` eigenpairs."""
    return spectrum(laplacian(build_weight_matrix(cloud, h)), k, normalization, h=h)


def suggest_connectivity(cloud: PointCloud, c: float, mode: str = "theory") -> float:
    """Connectivity radius ``h`` for ``cloud``.

    ``mode="theory"`` gives ``c N^{-1/(2m)}``; ``mode="experiment"`` gives
    ``c N^{-1/2}`` regardless of ``m``.
    """
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    n, m = cloud.n, cloud.intrinsic_dim
    if mode == "theory":
        return c * n ** (-1.0 / (2 * m))
    if mode == "experiment":
        return c * n ** -0.5
    raise ValueError(f"mode must be 'theory' or 'experiment', got {mode!r}")


def detect_saturation(eigenvalues, threshold: float = SATURATION_THRESHOLD,
                      run: int = SATURATION_RUN) -> int:
    """Suggest a truncation level from where an ascending spectrum flattens.

    Returns the smallest 1-based index ``i >= 2`` at which the forward
    relative increment ``(lam[i+1] - lam[i]) / lam[i]`` stays below
    ``threshold`` for ``run`` consecutive indices, or ``len(eigenvalues)``
    when no such plateau exists.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.size < 3:
        raise ValueError("need at least 3 eigenvalues")
    count = 0
    for i in range(1, lam.size - 1):  # 0-based i is 1-based i+1 >= 2
        if lam[i] <= 0:
            count = 0
            continue
        if (lam[i + 1] - lam[i]) / lam[i] < threshold:
            count += 1
            if count == run:
                return i - run + 2
        else:
            count = 0
    return int(lam.size)


def fit_spectral_scale(graph_eigenvalues, reference_eigenvalues) -> float:
    """Least-squares scalar ``a`` minimizing ``sum (a * g_i - r_i)^2``.

    Used only for comparing graph spectra with analytic ones; the GGP itself
    always consumes raw graph eigenvalues.
    """
    g = np.asarray(graph_eigenvalues, dtype=float)
    r = np.asarray(reference_eigenvalues, dtype=float)
    if g.shape != r.shape:
        raise ValueError("eigenvalue arrays must have equal length")
    denom = float(g @ g)
    if denom == 0:
        raise ValueError("graph eigenvalues are all zero")
    return float(g @ r) / denom
