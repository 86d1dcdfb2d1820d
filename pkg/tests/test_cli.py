import json
import subprocess
import sys

import numpy as np
import pytest

from ggpucb.cli import main


def _run(*args):
    return subprocess.run([sys.executable, "-m", "ggpucb.cli", *args], capture_output=True, text=True)


def test_no_args_is_usage_error(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_subcommand_is_usage_error(capsys):
    assert main(["bogus"]) == 2


def test_spectrum_csv(capsys):
    assert main(["spectrum", "--cloud", "circle", "--n", "200", "--k", "30"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "index,eigenvalue" and len(lines) == 31
    lam = np.array([float(l.split(",")[1]) for l in lines[1:]])
    assert abs(lam[0]) < 1e-10 and np.all(np.diff(lam) >= -1e-12)


def test_sample_points_and_prior_draw(capsys, tmp_path):
    assert main(["sample", "--cloud", "sphere", "--n", "50", "--seed", "2"]) == 0
    pts = np.loadtxt(capsys.readouterr().out.splitlines(), delimiter=",")
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0)
    out = tmp_path / "draw.csv"
    assert main(["sample", "--n", "80", "--k", "10", "--prior-draw", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "point_index,value" and len(rows) == 81


def test_benchmarks_list(capsys):
    assert main(["benchmarks", "list"]) == 0
    names = [l.split("\t")[0] for l in capsys.readouterr().out.splitlines()]
    assert {"levy", "ackley", "rastrigin", "heat", "circle-matern"} <= set(names)


def test_optimize_then_estimate(tmp_path, capsys):
    run = tmp_path / "run.csv"
    assert main(["optimize", "--objective", "circle-matern", "--L", "8", "--out", str(run)]) == 0
    capsys.readouterr()
    assert main(["estimate", "--run", str(run), "--noise-sd", "0.05", "--profile"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "iteration,s"
    est = [float(l.split(",")[1]) for l in out[1:10]]
    assert len(est) == 9 and all(1 <= e <= 10 for e in est)
    assert out[10] == "s,nll" and len(out) == 11 + 25


def test_estimate_needs_noise(tmp_path, capsys):
    run = tmp_path / "run.csv"
    main(["optimize", "--L", "3", "--out", str(run)])
    assert main(["estimate", "--run", str(run)]) == 1
    assert "noise-sd" in capsys.readouterr().err


def test_library_error_exit_code(capsys, tmp_path):
    assert main(["spectrum", "--cloud", f"file:{tmp_path / 'missing.txt'}", "--intrinsic-dim", "1"]) == 1
    assert main(["experiment", "--config", str(tmp_path / "nope.cfg")]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_experiment_writes_results(tmp_path, capsys):
    code = main(["experiment", "--out-dir", str(tmp_path), "--name", "tiny", "--n", "100", "--k", "10",
                 "--truth-k", "20", "--L", "4", "--trials", "2", "--methods", "ggp-ucb,random"])
    assert code == 0
    printed = json.loads(capsys.readouterr().out)
    assert set(printed) == {"ggp-ucb", "random"}
    d = tmp_path / "tiny"
    assert {p.name for p in d.iterdir()} == {"ggp-ucb.csv", "random.csv", "config.cfg", "summary.json"}
    assert len((d / "ggp-ucb.csv").read_text().splitlines()) == 5


def test_verbose_progress_on_stderr(tmp_path):
    res = _run("experiment", "--verbose", "--out-dir", str(tmp_path), "--n", "100", "--k", "10",
               "--truth-k", "20", "--L", "3", "--trials", "1")
    assert res.returncode == 0
    lines = [l for l in res.stderr.splitlines() if l.startswith("ggp-ucb 0 ")]
    assert len(lines) == 3
    assert [int(l.split()[2]) for l in lines] == [1, 2, 3]


def test_help_exits_zero():
    assert _run("--help").returncode == 0
    assert _run("experiment", "--help").returncode == 0
