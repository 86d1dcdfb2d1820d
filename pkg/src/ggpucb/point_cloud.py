"""Point clouds representing a hidden manifold.

A :class:`PointCloud` is an ``(N, d)`` array of samples together with the
declared intrinsic dimension ``m`` of the manifold they came from. The
intrinsic dimension is never estimated.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, PointCloudParseError

_SPLIT = re.compile(r"[,\s]+")


@dataclass(frozen=True, eq=False)
class PointCloud:
    """``N`` points in ``R^d`` sampled from an ``m``-dimensional manifold.

    Attributes
    ----------
    points : ndarray, shape (N, d)
        Read-only coordinates.
    intrinsic_dim : int
        Dimension ``m`` of the hidden manifold, ``1 <= m <= d``.
    labels : ndarray or None
        Optional per-point identifiers (e.g. indices into a finer cloud).
    """

    points: np.ndarray
    intrinsic_dim: int
    labels: np.ndarray | None = field(default=None)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise DegenerateInputError("points must be a 2-D array of shape (N, d)")
        if pts.shape[0] < 2:
            raise DegenerateInputError(f"a point cloud needs N >= 2 points, got {pts.shape[0]}")
        if not np.all(np.isfinite(pts)):
            raise DegenerateInputError("point coordinates must be finite")
        m = int(self.intrinsic_dim)
        if not 1 <= m <= pts.shape[1]:
            raise DegenerateInputError(
                f"intrinsic dimension must satisfy 1 <= m <= d={pts.shape[1]}, got {m}"
            )
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "intrinsic_dim", m)
        if self.labels is not None:
            labels = np.array(self.labels, copy=True)
            if labels.shape[0] != pts.shape[0]:
                raise DegenerateInputError("labels must have one entry per point")
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"PointCloud(N={self.n}, d={self.ambient_dim}, m={self.intrinsic_dim})"


def _rng(seed):
    return np.random.default_rng(seed)


def load_point_cloud(path, intrinsic_dim: int) -> PointCloud:
    """Read a cloud from a text file with one point per row.

    Coordinates may be separated by commas and/or whitespace. Blank lines and
    lines starting with ``#`` are skipped. The ambient dimension is taken from
    the first data row; any row of a different width raises
    :class:`PointCloudParseError` naming that row (1-based line number).
    """
    rows = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            tokens = [t for t in _SPLIT.split(text) if t]
            try:
                values = [float(t) for t in tokens]
            except ValueError as exc:
                raise PointCloudParseError(f"row {lineno}: {exc}", row=lineno) from None
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise PointCloudParseError(
                    f"row {lineno}: expected {width} coordinates, found {len(values)}",
                    row=lineno,
                )
            rows.append(values)
    if len(rows) < 2:
        raise DegenerateInputError(f"{path}: need at least 2 points, found {len(rows)}")
    return PointCloud(np.asarray(rows, dtype=float), intrinsic_dim)


def save_point_cloud(cloud: PointCloud, path) -> None:
    """Write ``cloud`` as comma-separated rows (round-trips through :func:`load_point_cloud`)."""
    from .io import atomic_write_text

    lines = [",".join(repr(float(v)) for v in row) for row in cloud.points]
    atomic_write_text(path, "\n".join(lines) + "\n")


def sample_circle(n: int, seed=None) -> PointCloud:
    """``n`` i.i.d. uniform points on the unit circle in ``R^2``."""
    if n < 2:
        raise DegenerateInputError(f"sample_circle needs n >= 2, got {n}")
    theta = _rng(seed).uniform(-np.pi, np.pi, size=n)
    return PointCloud(np.column_stack([np.cos(theta), np.sin(theta)]), 1)


def sample_sphere(n: int, seed=None) -> PointCloud:
    """``n`` i.i.d. uniform points on the unit sphere ``S^2``.

    Uses normalized isotropic Gaussians, which is exactly uniform.
    """
    if n < 4:
        raise DegenerateInputError(f"sample_sphere needs n >= 4, got {n}")
    g = _rng(seed).standard_normal((n, 3))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return PointCloud(g, 2)


def _peanut_surface(phi, v, b, rho):
    # centreline r(phi) = 1 + b cos 2phi in the xy-plane, circular tube of radius rho
    r = 1 + b * np.cos(2 * phi)
    dr = -2 * b * np.sin(2 * phi)
    c = np.stack([r * np.cos(phi), r * np.sin(phi)], -1)
    dc = np.stack([dr * np.cos(phi) - r * np.sin(phi), dr * np.sin(phi) + r * np.cos(phi)], -1)
    t = dc / np.linalg.norm(dc, axis=-1, keepdims=True)
    normal = np.stack([-t[..., 1], t[..., 0]], -1)
    xy = c + rho * np.cos(v)[..., None] * normal
    return np.concatenate([xy, (rho * np.sin(v))[..., None]], -1)


def _peanut_area_element(phi, v, b, rho, eps=1e-6):
    dp = (_peanut_surface(phi + eps, v, b, rho) - _peanut_surface(phi - eps, v, b, rho)) / (2 * eps)
    dv = (_peanut_surface(phi, v + eps, b, rho) - _peanut_surface(phi, v - eps, b, rho)) / (2 * eps)
    return np.linalg.norm(np.cross(dp, dv), axis=-1)


def sample_peanut_tube(n: int, seed=None, pinch: float = 0.4, radius: float = 0.2) -> PointCloud:
    """``n`` area-uniform points on a pinched tube (a peanut-shaped ring) in ``R^3``.

    The tube follows the planar curve ``r(phi) = 1 + pinch * cos(2 phi)`` with
    circular cross-section of the given ``radius``; the surface is rescaled to
    unit area. Its two lobes sit close together across the waist, so ambient
    distances there are much shorter than distances along the surface, which
    is what separates graph-based from Euclidean kernels.
    """
    if n < 4:
        raise DegenerateInputError(f"sample_peanut_tube needs n >= 4, got {n}")
    if not 0 <= pinch < 1:
        raise ValueError("pinch must lie in [0, 1)")
    if not 0 < radius < 1 - pinch:
        raise ValueError("tube radius must be positive and smaller than the waist")
    grid = np.linspace(0, 2 * np.pi, 1001), np.linspace(0, 2 * np.pi, 201)
    P, V = np.meshgrid(*grid, indexing="ij")
    J = _peanut_area_element(P, V, pinch, radius)
    area = J[:-1, :-1].mean() * (2 * np.pi) ** 2
    bound = 1.05 * J.max()
    rng = _rng(seed)
    chunks, have = [], 0
    while have < n:
        phi = rng.uniform(0, 2 * np.pi, 4 * n)
        v = rng.uniform(0, 2 * np.pi, 4 * n)
        keep = rng.uniform(0, bound, 4 * n) < _peanut_area_element(phi, v, pinch, radius)
        chunks.append(_peanut_surface(phi[keep], v[keep], pinch, radius))
        have += int(keep.sum())
    pts = np.concatenate(chunks)[:n] / np.sqrt(area)
    return PointCloud(pts, 2)


def subsample(cloud: PointCloud, n: int, seed=None) -> PointCloud:
    """Uniform random ``n``-subset of ``cloud`` without replacement.

    The returned cloud's ``labels`` hold the indices of the chosen points in
    ``cloud`` so values defined on the parent can be restricted exactly.
    """
    if not 2 <= n <= cloud.n:
        raise ValueError(f"subsample size must be in [2, {cloud.n}], got {n}")
    idx = _rng(seed).permutation(cloud.n)[:n]
    return PointCloud(cloud.points[idx], cloud.intrinsic_dim, labels=idx)


def bundled_manifold(name: str = "peanut2930") -> PointCloud:
    """Load a point cloud shipped with the package.

    ``"peanut2930"`` is ``sample_peanut_tube(2930, seed=7)``, the fine cloud
    of the two-scale GGP vs EGP comparison.
    """
    files = {"peanut2930": "peanut_2930.txt"}
    try:
        fname = files[name]
    except KeyError:
        raise ValueError(f"unknown bundled manifold {name!r}; available: {sorted(files)}") from None
    with resources.as_file(resources.files("ggpucb.data") / fname) as p:
        return load_point_cloud(Path(p), intrinsic_dim=2)


def angles(cloud: PointCloud) -> np.ndarray:
    """Angles in ``[-pi, pi)`` of points of a planar cloud (circle coordinates)."""
    theta = np.arctan2(cloud.points[:, 1], cloud.points[:, 0])
    # atan2 returns pi for (-1, +0); fold onto the half-open interval
    return np.where(theta >= np.pi, theta - 2 * np.pi, theta)
