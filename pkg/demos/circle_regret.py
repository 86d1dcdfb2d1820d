"""Simple regret of GGP-UCB against the analytic-eigenpair oracle on the circle.

A reduced version of configs/circle_matern.cfg (10 trials) that finishes in
a few seconds and prints the mean regret every 10 iterations.

    python demos/circle_regret.py
"""

from pathlib import Path

from ggpucb import ExperimentConfig, run_experiment

cfg = ExperimentConfig.load(Path(__file__).parent.parent / "configs" / "circle_matern.cfg")
cfg = cfg.replace(trials=10, methods="mgp-ucb,ggp-ucb")
result = run_experiment(cfg)

iters = [1, 10, 20, 30, 40, 50]
print("iteration " + " ".join(f"{l:>9d}" for l in iters))
for name, trace in result.traces.items():
    mean = trace.aggregate()[0]
    print(f"{name:9s} " + " ".join(f"{mean[l - 1]:9.4f}" for l in iters))
