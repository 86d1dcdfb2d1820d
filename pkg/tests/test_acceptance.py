"""End-to-end acceptance criteria; each test prints one PASS/FAIL line."""

from pathlib import Path

import numpy as np
import pytest
from scipy.special import eval_legendre
from scipy.stats import multivariate_normal

from conftest import VERDICTS
from ggpucb import (
    ExperimentConfig,
    KernelSpec,
    MleProblem,
    build_weight_matrix,
    condition,
    estimate,
    graph_gp,
    graph_spectrum,
    laplacian,
    negative_log_likelihood,
    noise_sd_rule,
    run_experiment,
    sample_circle,
    sample_sphere,
    sphere_eigenpairs,
)
from ggpucb.graph import fit_spectral_scale
from ggpucb.point_cloud import PointCloud

pytestmark = pytest.mark.acceptance

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def verdict(capsys):
    def report(number, title, ok, detail):
        line = f"criterion {number} {'PASS' if ok else 'FAIL'} {title}: {detail}"
        VERDICTS.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return report


def _run(name, tmp_path=None, **overrides):
    cfg = ExperimentConfig.load(CONFIGS / f"{name}.cfg")
    if overrides:
        cfg = cfg.replace(**overrides)
    return run_experiment(cfg, out_dir=tmp_path)


def test_1_laplacian_identity(verdict):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(10, 201))
        m = int(rng.integers(1, 3))
        pts = rng.uniform(-1, 1, size=(n, m + 1))
        g = build_weight_matrix(PointCloud(pts, m), float(rng.uniform(0.2, 0.8)))
        L = laplacian(g).toarray()
        W = g.weights.toarray()
        for v in rng.standard_normal((100, n)):
            direct = 0.5 * np.sum(W * (v[:, None] - v[None, :]) ** 2)
            worst = max(worst, abs(v @ L @ v - direct))
    verdict(1, "Laplacian identity", worst <= 1e-10, f"max abs error {worst:.2e} (tol 1e-10)")


def test_2_posterior_oracle(verdict):
    rng = np.random.default_rng(7)
    worst_mu = worst_var = 0.0
    for _ in range(50):
        n = int(rng.integers(5, 41))
        l = int(rng.integers(1, min(8, n) + 1))
        cloud = PointCloud(rng.uniform(-1, 1, size=(n, 2)), 2)
        spec = graph_spectrum(cloud, 1.2, n)
        model = graph_gp(spec, KernelSpec.matern(1.0, 2.0, 2))
        C = model.covariance_matrix(np.arange(n))
        q = rng.choice(n, l, replace=False)
        y = rng.standard_normal(l)
        sd = float(rng.uniform(0.05, 0.5))
        S = C[np.ix_(q, q)] + sd**2 * np.eye(l)
        Kq = C[:, q]
        mu = Kq @ np.linalg.solve(S, y)
        var = np.diag(C) - np.einsum("ij,ji->i", Kq, np.linalg.solve(S, Kq.T))
        post = condition(model, q, y, sd)
        worst_mu = max(worst_mu, np.max(np.abs(post.mean_all() - mu)))
        worst_var = max(worst_var, np.max(np.abs(post.var_all() - var)))
    ok = worst_mu <= 1e-8 and worst_var <= 1e-8
    verdict(2, "posterior oracle", ok, f"max abs mean {worst_mu:.1e}, variance {worst_var:.1e} (tol 1e-8)")


def test_3_circle_spectrum(verdict):
    cloud = sample_circle(500, 0)
    lam = graph_spectrum(cloud, 4 / np.sqrt(500), 11).eigenvalues
    pairs = lam[1:].reshape(5, 2)
    gaps = (pairs[:, 1] - pairs[:, 0]) / pairs[:, 1]
    levels = pairs.mean(axis=1)
    k2 = np.arange(1, 6) ** 2.0
    a = fit_spectral_scale(levels, k2)
    level_err = np.abs(a * levels - k2) / k2
    ok = abs(lam[0]) < 1e-10 and gaps.max() < 0.10 and level_err.max() < 0.20
    detail = (f"lambda_1 {lam[0]:.1e}, max pair gap {gaps.max():.3f} (tol 0.10), "
              f"max level error {level_err.max():.3f} (tol 0.20)")
    verdict(3, "circle spectrum", ok, detail)


def test_4_sphere_table(verdict):
    t = sphere_eigenpairs(5)
    pts = sample_sphere(60, 1).points
    Y = t.evaluate(pts)
    worst = 0.0
    for l in range(6):
        block = Y[:, t.degrees == l]
        lhs = block @ block.T
        rhs = (2 * l + 1) * eval_legendre(l, np.clip(pts @ pts.T, -1, 1))
        worst = max(worst, np.max(np.abs(lhs - rhs)) / (2 * l + 1))
    ok = len(t) == 36 and t.eigenvalues.max() == 30 and worst < 1e-8
    verdict(4, "sphere eigen-table", ok, f"{len(t)} modes, max eigenvalue {t.eigenvalues.max():g}, "
                                         f"addition theorem rel err {worst:.1e} (tol 1e-8)")


def _circle_matern_checks(res):
    s = res.summary()["methods"]
    g, o = res.traces["ggp-ucb"], res.traces["mgp-ucb"]
    mean = g.aggregate()[0]
    exact = s["ggp-ucb"]["fraction_zero_final"]
    mgp_final = o.aggregate()[0][-1]
    ok = (g.complete and o.complete and mean[-1] <= 0.1 * mean[0] and exact >= 0.6
          and mgp_final <= mean[-1] + 1e-9)
    detail = (f"GGP mean regret {mean[0]:.4g} -> {mean[-1]:.4g} (need <= 10%), exact in {exact:.0%} "
              f"(need >= 60%), MGP {mgp_final:.4g}")
    return ok, detail


def test_5_circle_regret(verdict, tmp_path):
    res = _run("circle_matern", tmp_path)
    verdict(5, "circle regret", *_circle_matern_checks(res))


@pytest.mark.parametrize("name", ["levy", "ackley", "rastrigin"])
def test_6_benchmark_functions(verdict, name):
    res = _run(f"circle_{name}", methods="ggp-ucb")
    frac = res.summary()["methods"]["ggp-ucb"]["fraction_zero_final"]
    verdict(6, f"benchmark {name}", frac >= 0.8, f"optimizer found in {frac:.0%} of trials (need >= 80%)")


def test_7_ggp_vs_egp(verdict):
    res = _run("manifold_matern")
    finals = {m: tr.aggregate()[0][-1] for m, tr in res.traces.items()}
    egp = {m: v for m, v in finals.items() if m.startswith("egp-ucb")}
    best = min(egp, key=egp.get)
    ggp = finals["ggp-ucb"]
    ok = res.traces["ggp-ucb"].complete and len(egp) == 15 and ggp < egp[best]
    verdict(7, "GGP vs EGP", ok, f"GGP {ggp:.3g} vs best EGP {best} {egp[best]:.3g}")


def test_8_heat_source(verdict):
    early = _run("heat_t0.25")
    g = early.traces["ggp-ucb"].aggregate()[0][-1]
    r = early.traces["random"].aggregate()[0][-1]
    late = _run("heat_t0.4")
    floor = late.traces["ggp-ucb"].aggregate()[0][-1]
    D = late.extras["attainable_discrepancy"]
    ok = g < r and D > 0 and abs(floor - D) <= 0.1 * D
    detail = (f"t=0.25 GGP {g:.4f} vs random {r:.4f}; t=0.4 GGP {floor:.4f} vs attainable "
              f"discrepancy {D:.4f} (within 10%)")
    verdict(8, "heat-source detection", ok, detail)


def test_9_mle_sanity(verdict):
    cloud = sample_circle(500, 0)
    spec = graph_spectrum(cloud, 4 / np.sqrt(500), 20)
    base = KernelSpec.matern(1.0, 2.0, 1, k=20)
    model = graph_gp(spec, base)
    est, worst = [], 0.0
    for r in range(20):
        rng = np.random.default_rng(r)
        f = model.sample_prior(rng)
        sd = noise_sd_rule(f)
        q = rng.choice(500, 30, replace=False)
        y = f[q] + sd * rng.standard_normal(30)
        prob = MleProblem(spec, base, q, y, sd)
        est.append(estimate(prob))
        for theta in prob.grid[::4]:
            S = graph_gp(spec, prob.spec_at(theta)).covariance_matrix(q) + sd**2 * np.eye(30)
            dense = -multivariate_normal(np.zeros(30), S).logpdf(y)
            worst = max(worst, abs(negative_log_likelihood(prob, theta) - dense))
    med = float(np.median(est))
    ok = 1.75 <= med <= 2.40 and worst <= 1e-8
    verdict(9, "MLE sanity", ok, f"median s {med:.3f} (bracket [1.75, 2.40]), nll vs dense {worst:.1e} (tol 1e-8)")


def test_10_determinism(verdict, tmp_path):
    a = _run("circle_matern", tmp_path / "a")
    b = _run("circle_matern", tmp_path / "b")
    da, db = tmp_path / "a" / "circle_matern", tmp_path / "b" / "circle_matern"
    names = sorted(p.name for p in da.glob("*.csv"))
    same = [n for n in names if (da / n).read_bytes() == (db / n).read_bytes()]
    ok = len(names) == 3 and same == names
    verdict(10, "determinism", ok, f"{len(same)}/{len(names)} CSV files byte-identical")
