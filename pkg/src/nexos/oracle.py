"""Brute-force reference solvers for desk-scale certification of the solver."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .operators import project_rank_spectral

__all__ = (
    "OracleReport",
    "sr_global_opt",
    "prox_grid_oracle",
    "rank_projection_oracle",
    "penalized_prox_reference",
)


@dataclass(frozen=True, eq=False)
class OracleReport:
    """Certified optimum of an enumeration: value, argmin, work count."""

    optimum: float
    argmin: np.ndarray
    candidates_examined: int


def _box_qp(H, g, Gamma, max_active_set_iters=50):
    """Minimize ``0.5 u'Hu - g'u`` over the box ``[-Gamma, Gamma]^n``.

    Unconstrained solve first; if the box binds, an active-set loop with a
    projected-gradient fallback polishes to gradient-mapping residual 1e-9.
    """
    n = g.size
    if n == 0:
        return np.zeros(0)
    try:
        u = np.linalg.solve(H, g)
    except np.linalg.LinAlgError:
        u = np.linalg.lstsq(H, g, rcond=None)[0]
    if np.max(np.abs(u)) <= Gamma:
        return u

    u = np.clip(u, -Gamma, Gamma)
    for _ in range(max_active_set_iters):
        active = np.abs(u) >= Gamma
        free = ~active
        if free.any():
            rhs = g[free] - H[np.ix_(free, active)] @ u[active]
            try:
                uf = np.linalg.solve(H[np.ix_(free, free)], rhs)
            except np.linalg.LinAlgError:
                break
            if np.max(np.abs(uf), initial=0.0) > Gamma:
                u[free] = np.clip(uf, -Gamma, Gamma)
                continue
            u[free] = uf
        grad = H @ u - g
        # KKT at the walls: gradient must push outward
        bad_hi = active & (u >= Gamma) & (grad > 1e-12)
        bad_lo = active & (u <= -Gamma) & (grad < -1e-12)
        if not bad_hi.any() and not bad_lo.any():
            return u
        release = np.argmax(np.abs(grad) * (bad_hi | bad_lo))
        u[release] = np.clip(u[release] - grad[release], -Gamma, Gamma)

    # projected-gradient fallback
    L = float(np.linalg.eigvalsh(H).max())
    step = 1.0 / max(L, 1e-12)
    for _ in range(200000):
        un = np.clip(u - step * (H @ u - g), -Gamma, Gamma)
        if np.linalg.norm(un - u) / step <= 1e-9:
            return un
        u = un
    return u


def sr_global_opt(A, b, k, Gamma, beta=0.0):
    """Global optimum of sparse regression by support enumeration.

    Enumerates every support of size at most ``k`` and solves the
    box-constrained ridge subproblem on each.  Guards keep the combinatorics
    at desk scale: at most 20 columns and ``k <= 6``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    d = A.shape[1]
    if d > 20:
        raise ValueError(f"enumeration guard: {d} columns exceed the limit of 20")
    if not 1 <= k <= 6:
        raise ValueError(f"enumeration guard: k={k} outside 1..6")
    if Gamma <= 0:
        raise ValueError("Gamma must be positive")

    best_val = float(b @ b)  # empty support
    best_x = np.zeros(d)
    examined = 1
    for size in range(1, k + 1):
        for support in itertools.combinations(range(d), size):
            S = list(support)
            As = A[:, S]
            H = 2.0 * (As.T @ As) + beta * np.eye(size)
            g = 2.0 * (As.T @ b)
            u = _box_qp(H, g, Gamma)
            x = np.zeros(d)
            x[S] = np.clip(u, -Gamma, Gamma)
            r = A @ x - b
            val = float(r @ r) + 0.5 * beta * float(x @ x)
            examined += 1
            if val < best_val - 1e-15 * max(1.0, abs(best_val)):
                best_val = val
                best_x = x
    return OracleReport(optimum=best_val, argmin=best_x, candidates_examined=examined)


def prox_grid_oracle(objective, box, resolution=201, refinements=8):
    """Grid minimization with local refinement, for 1- or 2-dim objectives.

    ``box`` is ``(lo, hi)`` or a pair of such intervals.  A dense scan picks
    the best grid point (first hit wins, so exact ties resolve to the
    lexicographically smallest point), then the grid is recentered and
    shrunk around the incumbent a few times.

    Returns ``(argmin, value)``.
    """
    box = np.atleast_2d(np.asarray(box, dtype=float))
    ndim = box.shape[0]
    if ndim > 2:
        raise ValueError("grid oracle supports at most 2 dimensions")
    if resolution > 2001:
        raise ValueError("resolution guard: at most 2001 points per axis")
    if resolution < 3:
        raise ValueError("resolution must be at least 3")

    lo = box[:, 0].copy()
    hi = box[:, 1].copy()
    best_pt = None
    best_val = np.inf
    for _ in range(refinements):
        axes = [np.linspace(lo[i], hi[i], resolution) for i in range(ndim)]
        if ndim == 1:
            pts = axes[0][:, None]
        else:
            g0, g1 = np.meshgrid(axes[0], axes[1], indexing="ij")
            pts = np.column_stack([g0.ravel(), g1.ravel()])
        vals = np.array([objective(p) for p in pts])
        idx = int(np.argmin(vals))  # first occurrence: lexicographic tie rule
        if vals[idx] < best_val:
            best_val = float(vals[idx])
            best_pt = pts[idx].copy()
        spacing = (hi - lo) / (resolution - 1)
        lo = best_pt - 2.0 * spacing
        hi = best_pt + 2.0 * spacing
    out = best_pt if ndim > 1 else best_pt[:1]
    return out, best_val


def rank_projection_oracle(X, r, Gamma, samples=100000, seed=0):
    """Random feasible search for the nearest bounded low-rank matrix.

    Draws ``samples`` random rank-``r`` factor products, rescales any that
    break the spectral bound, adds the analytic truncate-and-clamp
    candidate, and returns the candidate closest to ``X``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or max(X.shape) > 3:
        raise ValueError("matrix guard: at most 3x3")
    m, d = X.shape
    rng = np.random.default_rng(seed)
    best = project_rank_spectral(X, r, Gamma if np.isfinite(Gamma) else 1e300)
    if not np.isfinite(Gamma):
        s = np.linalg.svd(X, compute_uv=False)
        Gamma_cap = 2.0 * (s[0] + 1.0)
    else:
        Gamma_cap = Gamma
    best_d = float(np.linalg.norm(X - best))
    for _ in range(samples):
        B = normal_factors(rng, m, d, r)
        s_max = np.linalg.norm(B, 2)
        if s_max > Gamma_cap and s_max > 0:
            B *= Gamma_cap / s_max
        dist = float(np.linalg.norm(X - B))
        if dist < best_d:
            best_d = dist
            best = B
    return best


def normal_factors(rng, m, d, r):
    """One random rank-``r`` candidate from gaussian factors."""
    return rng.standard_normal((m, r)) @ rng.standard_normal((r, d))


def _coord_min_kept(x, Gamma, gamma, mu, beta):
    """1-dim minimum of the penalized prox objective for a kept coordinate.

    Minimizes ``(beta/2) y^2 + (y - clamp(y, Gamma))^2 / (2 mu)
    + (y - x)^2 / (2 gamma)``.  The function is convex piecewise quadratic,
    so the minimum sits at a valid branch stationary point or at a clamp
    kink; all candidates are evaluated directly.
    """

    def h(y):
        c = min(max(y, -Gamma), Gamma)
        return (
            0.5 * beta * y * y
            + (y - c) ** 2 / (2.0 * mu)
            + (y - x) ** 2 / (2.0 * gamma)
        )

    mid = x / (gamma * beta + 1.0)
    heavy = beta + 1.0 / mu + 1.0 / gamma
    cands = [Gamma, -Gamma]
    if abs(mid) <= Gamma:
        cands.append(mid)
    up = (Gamma / mu + x / gamma) / heavy
    if up > Gamma:
        cands.append(up)
    lo = (-Gamma / mu + x / gamma) / heavy
    if lo < -Gamma:
        cands.append(lo)
    vals = [h(y) for y in cands]
    i = int(np.argmin(vals))
    return cands[i], vals[i]


def penalized_prox_reference(x, k, Gamma, gamma, mu, beta=0.0):
    """Analytic per-support minimizer of the penalized prox objective.

    Independent reference for the closed-form prox of the penalty
    ``d(.)^2/(2 mu) + (beta/2)||.||^2`` over the sparse box: for every
    support of size ``k`` the objective separates per coordinate, each
    1-dim piece is minimized exactly, and the best support wins.

    Returns ``(argmin, value)``.  Desk-scale guard: dimension at most 10.
    """
    x = np.asarray(x, dtype=float).ravel()
    d = x.size
    if d > 10:
        raise ValueError("reference guard: dimension at most 10")
    if not 1 <= k <= d:
        raise ValueError(f"k={k} out of range")
    heavy = beta + 1.0 / mu + 1.0 / gamma
    best_val = np.inf
    best_y = None
    for support in itertools.combinations(range(d), k):
        y = np.empty(d)
        total = 0.0
        for i in range(d):
            if i in support:
                yi, hi = _coord_min_kept(x[i], Gamma, gamma, mu, beta)
            else:
                yi = (x[i] / gamma) / heavy
                hi = (
                    0.5 * beta * yi * yi
                    + yi * yi / (2.0 * mu)
                    + (yi - x[i]) ** 2 / (2.0 * gamma)
                )
            y[i] = yi
            total += hi
        if total < best_val:
            best_val = total
            best_y = y
    return best_y, float(best_val)
