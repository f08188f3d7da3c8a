#!/usr/bin/env python3
"""Smoothing wrapper: use a nonsmooth convex cost through its Moreau envelope.

A prox-capable nonsmooth function (here the 1-norm) becomes smooth and
strongly convex after envelope smoothing, so the same splitting machinery
applies. One base-prox call evaluates the smoothed prox exactly.
"""

import numpy as np

import nexos

one_norm = nexos.SmoothedFunction(
    value_fn=lambda u: float(np.sum(np.abs(u))),
    prox_fn=lambda u, t: np.sign(u) * np.maximum(np.abs(u) - t, 0.0),
    nu=1.0,
)

x = np.array([3.0])
print(f"envelope of |.| at {x[0]}: {nexos.smoothed_value(one_norm, x):.4f} "
      f"(base value {abs(x[0]):.4f}, envelope is the Huber function)")
print(f"gradient {nexos.smoothed_gradient(one_norm, x)[0]:.4f} "
      "(saturates at +/-1 outside the quadratic zone)")
print(f"prox at gamma=1: {nexos.smoothed_prox(one_norm, 1.0, x)[0]:.4f} "
      "(minimizes Huber(y) + (y-3)^2/2, analytic answer 2)")

# shrinking nu recovers the base prox
for nu in (1.0, 1e-2, 1e-6):
    fun = nexos.SmoothedFunction(one_norm.value_fn, one_norm.prox_fn, nu=nu)
    p = nexos.smoothed_prox(fun, 1.0, x)[0]
    print(f"nu={nu:<6g} smoothed prox {p:.6f} (soft threshold gives 2.0)")

# the gradient is (1/nu)-lipschitz: check on random pairs
rng = np.random.default_rng(0)
fun = nexos.SmoothedFunction(one_norm.value_fn, one_norm.prox_fn, nu=0.25)
worst = 0.0
for _ in range(200):
    u, v = rng.uniform(-2, 2, (2, 5))
    num = np.linalg.norm(
        nexos.smoothed_gradient(fun, u) - nexos.smoothed_gradient(fun, v)
    )
    worst = max(worst, num / np.linalg.norm(u - v))
print(f"\nempirical gradient lipschitz constant {worst:.3f} "
      f"(bound 1/nu = {1 / 0.25:.0f})")

# the smoothed function plugs straight into the solver: approximate a noisy
# vector under the (smoothed) 1-norm distance with at most two nonzeros
y = np.zeros(12)
y[[2, 7]] = [1.5, -2.0]
y += 0.05 * rng.standard_normal(12)
robust = nexos.SmoothedFunction(
    value_fn=lambda u: float(np.sum(np.abs(u - y))),
    prox_fn=lambda u, t: y + np.sign(u - y) * np.maximum(np.abs(u - y) - t, 0.0),
    nu=0.1,
    beta_inner=1e-6,
)
instance = nexos.ProblemInstance(
    loss=nexos.SmoothedFunctionLoss(robust, 12),
    set=nexos.SparseBoxSet(2, 3.0, 12),
)
result = nexos.solve(instance, nexos.SolverSettings(gamma=0.3))
print(f"\nsparse 1-norm approximation: status {result.status.value}, "
      f"support {np.nonzero(result.feasible_point)[0]} (true [2 7])")
