#!/usr/bin/env python3
"""Low-rank factor analysis: split a covariance into common factors plus noise.

Decomposes a psd matrix Sigma as X + diag(d) with X psd of rank at most r
and d nonnegative, keeping Sigma - diag(d) psd so the residual covariance
stays interpretable.
"""

import numpy as np

import nexos

# synthetic covariance: 2 common factors plus heterogeneous noise
rng = np.random.default_rng(5)
p, r_true = 6, 2
L = rng.standard_normal((p, r_true))
noise = rng.uniform(0.2, 0.8, p)
Sigma = L @ L.T + np.diag(noise)
print(f"Sigma is {p} x {p}, built from {r_true} factors plus diagonal noise")

for r in (1, 2, 3):
    instance = nexos.build_factor_analysis(Sigma, r=r, Gamma=50.0)
    result = nexos.solve(instance, nexos.SolverSettings(gamma=0.05))
    X, d = instance.loss.split(result.feasible_point)
    ev = nexos.metric_explained_variance(X, np.diag(d), Sigma, r)
    print(f"r={r}: fit {instance.loss.value(result.feasible_point):9.4f}   "
          f"explained variance {ev:5.3f}   "
          f"min eig Sigma-D {np.linalg.eigvalsh(Sigma - np.diag(d)).min():.3f}")
print("\nexplained variance climbs with r and the residual covariance "
      "stays psd")
