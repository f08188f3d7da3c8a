"""Compiled inner-loop kernel for least-squares losses over sparse boxes.

Optional: importing this module requires numba.  The kernel mirrors the
generic loop in ``engine.solve_inner`` step for step; only the floating-point
summation order of the prox matvec may differ from the BLAS path, so results
agree to rounding, not bitwise.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def sparse_box_drs_kernel(Minv, shift, z, kappa, theta, k, Gamma, eps, max_iters, gaps):
    """Run the splitting iteration in place; returns (n, gap, x, y, z)."""
    d = z.shape[0]
    blend = 1.0 - theta
    x = np.empty(d)
    y = np.empty(d)
    yt = np.empty(d)
    gap = 1e300
    n = 0
    for it in range(max_iters):
        xv = np.dot(Minv, z)
        for i in range(d):
            x[i] = xv[i] + shift[i]
            yt[i] = kappa * (2.0 * x[i] - z[i])
            y[i] = theta * yt[i]
        # top-k magnitudes, ties to the lowest index (mergesort is stable)
        order = np.argsort(-np.abs(yt), kind="mergesort")
        for jj in range(k):
            idx = order[jj]
            v = yt[idx]
            if v > Gamma:
                v = Gamma
            elif v < -Gamma:
                v = -Gamma
            y[idx] = theta * yt[idx] + blend * v
        g2 = 0.0
        for i in range(d):
            z[i] += y[i] - x[i]
            df = x[i] - y[i]
            g2 += df * df
        gap = np.sqrt(g2)
        gaps[it] = gap
        n = it + 1
        if gap <= eps:
            break
    return n, gap, x.copy(), y.copy(), z
