#!/usr/bin/env python3
"""Matrix completion: fill a partially observed low-rank matrix."""

import numpy as np

import nexos

rng = np.random.default_rng(0)
m, d, r = 12, 15, 2
Z = rng.standard_normal((m, r)) @ rng.standard_normal((d, r)).T
mask = rng.random((m, d)) < 0.6
rows, cols = np.nonzero(mask)
print(f"{rows.size} of {m * d} entries observed "
      f"({100 * rows.size / (m * d):.0f}%), target rank {r}")

# Gamma omitted: derived by filling the missing entries with the largest
# absolute observation and taking the frobenius norm of that surrogate
instance = nexos.build_matrix_completion(Z[rows, cols], (rows, cols),
                                         (m, d), r)
print(f"derived spectral bound Gamma = {instance.set.Gamma:.2f}")

result = nexos.solve(instance, nexos.SolverSettings(gamma=0.5))
X = result.feasible_point.reshape((m, d), order="F")

unseen = ~mask
print(f"\nstatus {result.status.value} after {len(result.stages)} stages")
print(f"rms error on observed entries  "
      f"{nexos.metric_rms(X[mask], Z[mask]):.2e}")
print(f"rms error on held-out entries  "
      f"{nexos.metric_rms(X[unseen], Z[unseen]):.2e}")
print(f"rms of held-out entries        {np.sqrt(np.mean(Z[unseen]**2)):.2e}")
