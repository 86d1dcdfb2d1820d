import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from ggpucb import (
    EMPIRICAL_L2,
    EUCLIDEAN_UNIT,
    ConnectivityError,
    PointCloud,
    build_weight_matrix,
    detect_saturation,
    graph_spectrum,
    laplacian,
    sample_circle,
    sample_sphere,
    spectrum,
    suggest_connectivity,
)
from ggpucb.graph import DENSE_LIMIT, fit_spectral_scale, unit_ball_volume


def _quadratic_form_gap(L, W, v):
    Wd = W.toarray()
    lhs = v @ (L @ v)
    rhs = 0.5 * np.sum(Wd * (v[:, None] - v[None, :]) ** 2)
    return abs(lhs - rhs), lhs


def test_unit_ball_volumes():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(np.pi)
    assert unit_ball_volume(3) == pytest.approx(4 * np.pi / 3)


def test_weight_value_n10():
    rng = np.random.default_rng(0)
    pts = rng.uniform(5, 6, size=(10, 2))
    pts[0] = [0.0, 0.0]
    pts[1] = [0.1, 0.0]
    g = build_weight_matrix(PointCloud(pts, 2), 0.5)
    assert g.weights[0, 1] == pytest.approx(8 / (10 * np.pi * 0.5**4), rel=1e-12)
    assert g.weights[0, 1] == pytest.approx(4.0744, abs=1e-4)


def test_indicator_is_strict():
    pts = np.array([[0.0, 0.0], [0.5, 0.0], [2.0, 0.0]])
    g = build_weight_matrix(PointCloud(pts, 1), 0.5)
    assert g.weights.nnz == 0
    g = build_weight_matrix(PointCloud(pts, 1), 0.5000001)
    assert g.weights[0, 1] > 0 and g.weights[1, 2] == 0


def test_weight_invariants():
    c = sample_sphere(200, 1)
    h = 0.4
    g = build_weight_matrix(c, h)
    W = g.weights.toarray()
    D = np.linalg.norm(c.points[:, None] - c.points[None], axis=2)
    np.testing.assert_array_equal(W, W.T)
    assert np.all(np.diag(W) == 0)
    assert set(np.unique(W)) <= {0.0, g.coefficient}
    expected = (D < h) & ~np.eye(c.n, dtype=bool)
    np.testing.assert_array_equal(W > 0, expected)


def test_nonpositive_h():
    with pytest.raises(ValueError):
        build_weight_matrix(sample_circle(5, 0), 0.0)


def test_two_node_laplacian():
    g = build_weight_matrix(PointCloud(np.array([[0.0], [0.1]]), 1), 0.5)
    w = g.coefficient
    L = laplacian(g).toarray()
    np.testing.assert_allclose(L, [[w, -w], [-w, w]])
    np.testing.assert_allclose(np.linalg.eigvalsh(L), [0, 2 * w], atol=1e-12 * w)


def test_constant_vector_in_kernel():
    c = sample_circle(100, 2)
    L = laplacian(build_weight_matrix(c, 0.3))
    assert np.max(np.abs(L @ np.ones(c.n))) < 1e-10 * abs(L).max()


@given(seed=st.integers(0, 10_000), n=st.integers(5, 120), m=st.sampled_from([1, 2]))
def test_quadratic_form_identity(seed, n, m):
    c = sample_circle(n, seed) if m == 1 else sample_sphere(max(n, 4), seed)
    g = build_weight_matrix(c, 0.6)
    L = laplacian(g)
    v = np.random.default_rng(seed).standard_normal(c.n)
    gap, q = _quadratic_form_gap(L, g.weights, v)
    assert gap <= 1e-10 * max(1.0, q)
    assert q >= -1e-10


def test_spectrum_basic_properties(circle_spectrum):
    s = circle_spectrum
    n = s.n
    assert s.normalization == EMPIRICAL_L2
    assert abs(s.eigenvalues[0]) < 1e-10
    assert np.all(np.diff(s.eigenvalues) >= 0)
    assert np.all(s.eigenvalues >= -1e-10)
    G = s.eigenvectors.T @ s.eigenvectors
    np.testing.assert_allclose(G, n * np.eye(s.k), atol=1e-8 * n)
    # first eigenvector constant and positive
    np.testing.assert_allclose(s.eigenvectors[:, 0], 1.0, atol=1e-8)
    for col in s.eigenvectors.T:
        first = col[np.abs(col) > 1e-10][0]
        assert first > 0


def test_spectrum_residuals(circle500):
    h = suggest_connectivity(circle500, 4, "experiment")
    L = laplacian(build_weight_matrix(circle500, h))
    s = spectrum(L, 25, EUCLIDEAN_UNIT)
    R = L @ s.eigenvectors - s.eigenvectors * s.eigenvalues
    assert np.max(np.linalg.norm(R, axis=0)) <= 1e-8
    np.testing.assert_allclose(np.linalg.norm(s.eigenvectors, axis=0), 1, atol=1e-8)


def test_renormalize_roundtrip(circle_spectrum):
    u = circle_spectrum.renormalized(EUCLIDEAN_UNIT)
    np.testing.assert_allclose(np.linalg.norm(u.eigenvectors, axis=0), 1, atol=1e-8)
    back = u.renormalized(EMPIRICAL_L2)
    np.testing.assert_allclose(back.eigenvectors, circle_spectrum.eigenvectors, atol=1e-12)
    with pytest.raises(ValueError):
        circle_spectrum.renormalized("bogus")


def test_sparse_path_matches_dense():
    c = sample_sphere(DENSE_LIMIT + 300, 4)
    h = suggest_connectivity(c, 2, "theory")
    L = laplacian(build_weight_matrix(c, h))
    s = spectrum(L, 20)
    dense = np.linalg.eigvalsh(L.toarray())[:20]
    np.testing.assert_allclose(s.eigenvalues, dense, atol=1e-8 * dense[-1])
    R = L @ s.eigenvectors - s.eigenvectors * s.eigenvalues
    assert np.max(np.linalg.norm(R, axis=0) / np.linalg.norm(s.eigenvectors, axis=0)) <= 1e-8


def test_disconnected_graph():
    pts = np.array([[0, 0], [0, 0.01], [5, 5], [5, 5.01]], dtype=float)
    with pytest.raises(ConnectivityError, match="increase"):
        graph_spectrum(PointCloud(pts, 1), 0.1, 2)


def test_k_out_of_range(circle500):
    L = laplacian(build_weight_matrix(circle500, 0.2))
    with pytest.raises(ValueError):
        spectrum(L, 0)
    with pytest.raises(ValueError):
        spectrum(L, 501)


def test_permutation_invariance():
    c = sample_circle(300, 9)
    perm = np.random.default_rng(1).permutation(300)
    h = suggest_connectivity(c, 4, "experiment")
    a = graph_spectrum(c, h, 15)
    b = graph_spectrum(PointCloud(c.points[perm], 1), h, 15)
    np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, atol=1e-8 * a.eigenvalues[-1])
    # compare spectral projectors for the leading well-separated block (subspace level)
    Pa = a.eigenvectors[perm, :5] @ a.eigenvectors[perm, :5].T
    Pb = b.eigenvectors[:, :5] @ b.eigenvectors[:, :5].T
    np.testing.assert_allclose(Pa, Pb, atol=1e-6 * 300)


def test_one_zero_eigenvalue_when_connected(circle_spectrum):
    assert np.sum(circle_spectrum.eigenvalues < 1e-10) == 1


def test_truncate(circle_spectrum):
    t = circle_spectrum.truncate(5)
    assert t.k == 5
    np.testing.assert_array_equal(t.eigenvalues, circle_spectrum.eigenvalues[:5])
    with pytest.raises(ValueError):
        circle_spectrum.truncate(100)


def test_suggest_connectivity_values():
    c500 = sample_circle(500, 0)
    assert suggest_connectivity(c500, 4, "experiment") == pytest.approx(0.178885, abs=1e-5)
    s = PointCloud(np.random.default_rng(0).standard_normal((10_000, 3)), 2)
    assert suggest_connectivity(s, 4, "theory") == pytest.approx(0.4)
    assert suggest_connectivity(c500, 8, "theory") == pytest.approx(2 * suggest_connectivity(c500, 4, "theory"))
    with pytest.raises(ValueError):
        suggest_connectivity(c500, 4, "other")
    with pytest.raises(ValueError):
        suggest_connectivity(c500, -1)


def test_saturation_none_for_quadratic_growth():
    lam = np.array([0] + [k * k for k in range(1, 30) for _ in range(2)], dtype=float)
    assert detect_saturation(lam) == lam.size


def test_saturation_constructed_plateau():
    lam = np.concatenate([np.linspace(0, 100, 20) ** 1.5, np.full(20, 1000.0)])
    i = detect_saturation(lam)
    assert 19 <= i <= 21


def test_saturation_needs_three():
    with pytest.raises(ValueError):
        detect_saturation([0, 1])


def test_saturation_on_circle(circle500):
    h = suggest_connectivity(circle500, 4, "experiment")
    s = graph_spectrum(circle500, h, 80)
    assert 15 <= detect_saturation(s.eigenvalues) <= 40


def test_fit_spectral_scale():
    g = np.array([1.0, 2.0, 3.0])
    assert fit_spectral_scale(g, 2.5 * g) == pytest.approx(2.5)
    with pytest.raises(ValueError):
        fit_spectral_scale(np.zeros(3), g)
