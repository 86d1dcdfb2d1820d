"""Compare the graph-Laplacian spectrum of a random circle cloud with k^2.

The circle's Laplace-Beltrami eigenvalues are 0, 1, 1, 4, 4, 9, 9, ...
Graph eigenvalues come in near-pairs; after one least-squares scale factor
their pair means track k^2 until the spectrum saturates.

    python demos/circle_spectrum.py
"""

import numpy as np

from ggpucb import detect_saturation, graph_spectrum, sample_circle, suggest_connectivity
from ggpucb.graph import fit_spectral_scale

N = 500
cloud = sample_circle(N, 0)
h = suggest_connectivity(cloud, 4, "experiment")
lam = graph_spectrum(cloud, h, 41).eigenvalues

pairs = lam[1:].reshape(-1, 2)
levels = pairs.mean(axis=1)
k = np.arange(1, levels.size + 1)
a = fit_spectral_scale(levels[:5], k[:5] ** 2.0)

print(f"N={N}  h={h:.4f}  lambda_1={lam[0]:.1e}  scale={a:.3f}")
print(" k   pair (scaled)         k^2   gap")
for j in range(10):
    lo, hi = a * pairs[j]
    print(f"{k[j]:2d}   {lo:8.3f} {hi:8.3f}   {k[j] ** 2:4d}   {(hi - lo) / hi:.3f}")
print("saturation index:", detect_saturation(lam))
