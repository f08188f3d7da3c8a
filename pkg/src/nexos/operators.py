"""Proximal operators and nonconvex projections used by the splitting engine."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import NumericalError

__all__ = (
    "DrsConstants",
    "SmoothedFunction",
    "project_sparse_box",
    "project_rank_spectral",
    "project_fa_set",
    "project_psd_cone",
    "project_spectrahedron_diag",
    "prox_penalized_indicator",
    "prox_least_squares",
    "prox_masked_least_squares",
    "prox_affine_map_least_squares",
    "prox_fa_loss",
    "smoothed_value",
    "smoothed_prox",
    "smoothed_gradient",
)


@dataclass(frozen=True)
class DrsConstants:
    """Mixing scalars of the penalized-indicator prox.

    ``kappa = 1 / (beta*gamma + 1)`` and ``theta = mu / (gamma*kappa + mu)``;
    both lie in (0, 1] and must be recomputed whenever ``mu`` changes.
    """

    kappa: float
    theta: float

    @classmethod
    def from_parameters(cls, gamma, mu, beta):
        if gamma <= 0 or mu <= 0:
            raise ValueError("gamma and mu must be positive")
        if beta < 0:
            raise ValueError("beta must be nonnegative")
        kappa = 1.0 / (beta * gamma + 1.0)
        theta = mu / (gamma * kappa + mu)
        return cls(kappa=kappa, theta=theta)


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------


def project_sparse_box(x, k, Gamma):
    """Project onto ``{card(x) <= k, ||x||_inf <= Gamma}``.

    Keeps the ``k`` largest-magnitude entries (ties broken by lowest index),
    zeroes the rest, and clamps the kept entries to ``[-Gamma, Gamma]``.
    That is the exact Euclidean projection: the per-coordinate saving of
    keeping an entry is monotone in its magnitude.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a vector")
    if not 1 <= k <= x.size:
        raise ValueError(f"k={k} out of range for dimension {x.size}")
    if Gamma <= 0:
        raise ValueError("Gamma must be positive")
    # stable sort on -|x|: descending magnitude, ties by ascending index
    order = np.argsort(-np.abs(x), kind="stable")
    out = np.zeros_like(x)
    keep = order[:k]
    out[keep] = np.clip(x[keep], -Gamma, Gamma)
    return out


def project_rank_spectral(X, r, Gamma):
    """Project onto ``{rank(X) <= r, ||X||_2 <= Gamma}``.

    Computes a full SVD, clamps the leading ``r`` singular values at
    ``Gamma``, zeroes the rest, and reconstructs.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected a matrix")
    if not 1 <= r <= min(X.shape):
        raise ValueError(f"r={r} out of range for shape {X.shape}")
    if Gamma <= 0:
        raise ValueError("Gamma must be positive")
    try:
        U, s, Vt = np.linalg.svd(X, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed on shape {X.shape}: {exc}") from exc
    s = np.minimum(s, Gamma)
    s[r:] = 0.0
    return (U * s) @ Vt


def project_psd_cone(S):
    """Nearest positive semidefinite matrix to the symmetric matrix ``S``."""
    S = np.asarray(S, dtype=float)
    S = 0.5 * (S + S.T)
    w, V = np.linalg.eigh(S)
    w = np.maximum(w, 0.0)
    P = (V * w) @ V.T
    return 0.5 * (P + P.T)


def project_spectrahedron_diag(d, Sigma, tol=1e-12, max_iters=2000):
    """Project ``d`` onto ``{d >= 0} intersect {Sigma - diag(d) >= 0 (psd)}``.

    Runs Dykstra's alternating projections in symmetric-matrix space between
    the nonnegative-diagonal matrices and the down-shifted cone
    ``{D : Sigma - D psd}``.  Stops once the two set-iterates agree to
    ``tol`` in Frobenius norm; budget misses above 1e-8 raise.
    """
    d = np.asarray(d, dtype=float)
    Sigma = np.asarray(Sigma, dtype=float)
    p = d.size
    if Sigma.shape != (p, p):
        raise ValueError("Sigma shape does not match d")
    D = np.diag(d)
    P = np.zeros_like(D)
    Q = np.zeros_like(D)
    res = np.inf
    for _ in range(max_iters):
        # nearest nonnegative diagonal matrix
        Y = np.diag(np.maximum(np.diag(D + P), 0.0))
        P = D + P - Y
        # nearest matrix with Sigma - D psd
        D = Sigma - project_psd_cone(Sigma - (Y + Q))
        Q = Y + Q - D
        res = float(np.linalg.norm(D - Y))
        if res <= tol:
            break
    if res > 1e-8:
        raise NumericalError(
            f"Dykstra projection stalled at residual {res:.3e}", residual=res
        )
    # Y is exactly nonnegative diagonal and within res of the psd side
    return np.maximum(np.diag(D), 0.0)


def project_fa_set(X, d, r, Gamma, sym_tol=1e-10):
    """Product projection for the factor-analysis constraint pair.

    ``X`` goes onto ``{rank <= r, spectral norm <= Gamma}`` and the diagonal
    vector ``d`` onto the nonnegative orthant, componentwise.
    """
    X = np.asarray(X, dtype=float)
    d = np.asarray(d, dtype=float)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError("X must be square")
    if X.shape[0] != d.size:
        raise ValueError("X and d dimensions disagree")
    asym = float(np.max(np.abs(X - X.T), initial=0.0))
    if asym > sym_tol * max(1.0, float(np.max(np.abs(X), initial=0.0))):
        raise ValueError(f"X is asymmetric beyond tolerance: {asym:.3e}")
    Xp = project_rank_spectral(X, r, Gamma)
    # symmetric input, so the truncation is symmetric up to roundoff
    Xp = 0.5 * (Xp + Xp.T)
    return Xp, np.maximum(d, 0.0)


# ---------------------------------------------------------------------------
# proximal operators
# ---------------------------------------------------------------------------


def prox_penalized_indicator(x, set_, gamma, mu, beta=0.0):
    """Prox of the penalized indicator ``d(.)^2/(2 mu) + (beta/2)||.||^2``.

    Closed form: with ``kappa = 1/(beta*gamma + 1)`` and
    ``theta = mu/(gamma*kappa + mu)``,

        ``theta * kappa * x + (1 - theta) * project(kappa * x)``.

    The output minimizes ``d(y)^2/(2 mu) + (beta/2)||y||^2
    + ||y - x||^2 / (2 gamma)``.
    """
    c = DrsConstants.from_parameters(gamma, mu, beta)
    x = set_._check_point(x)
    kx = c.kappa * x
    return c.theta * kx + (1.0 - c.theta) * set_.project(kx)


def _ls_factor(A, gamma):
    """Cholesky data for solving ``(I + 2 gamma A^T A) y = w``.

    Factors whichever Gram matrix is smaller; the wide case goes through the
    matrix inversion lemma so only an ``m x m`` factorization is needed.
    """
    m, n = A.shape
    if m == 0:
        return ("identity", None)
    if m < n:
        G = 2.0 * gamma * (A @ A.T)
        G[np.diag_indices_from(G)] += 1.0
        kind = "woodbury"
    else:
        G = 2.0 * gamma * (A.T @ A)
        G[np.diag_indices_from(G)] += 1.0
        kind = "direct"
    try:
        return (kind, scipy.linalg.cho_factor(G, lower=True, check_finite=False))
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"normal-equation factorization failed: {exc}") from exc


def _ls_apply(kind, chol, A, gamma, w):
    """Solve ``(I + 2 gamma A^T A) y = w`` with data from :func:`_ls_factor`."""
    if kind == "identity":
        return w
    if kind == "woodbury":
        # (I + c A^T A)^{-1} = I - c A^T (I + c A A^T)^{-1} A
        t = scipy.linalg.cho_solve(chol, A @ w, check_finite=False)
        return w - 2.0 * gamma * (A.T @ t)
    return scipy.linalg.cho_solve(chol, w, check_finite=False)


def prox_least_squares(A, b, gamma, z):
    """Prox of ``f(x) = ||A x - b||^2`` at ``z``.

    Returns the unique solution of ``(I + 2 gamma A^T A) y = z + 2 gamma A^T b``.
    Loss classes cache the factorization per ``gamma``; this standalone form
    factors on every call.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    z = np.asarray(z, dtype=float).ravel()
    if A.shape[0] != b.size or A.shape[1] != z.size:
        raise ValueError(f"shape mismatch: A {A.shape}, b {b.shape}, z {z.shape}")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    kind, chol = _ls_factor(A, gamma)
    w = z + 2.0 * gamma * (A.T @ b)
    return _ls_apply(kind, chol, A, gamma, w)


def prox_masked_least_squares(values, rows, cols, gamma, V):
    """Prox of the masked quadratic ``sum_{(i,j) in Omega} (X_ij - Z_ij)^2``.

    Entrywise closed form: observed entries become
    ``(V_ij + 2 gamma Z_ij) / (1 + 2 gamma)``, the rest pass through.
    """
    V = np.asarray(V, dtype=float)
    rows = np.asarray(rows, dtype=int)
    cols = np.asarray(cols, dtype=int)
    values = np.asarray(values, dtype=float)
    if not (rows.shape == cols.shape == values.shape):
        raise ValueError("values, rows, cols must have matching shapes")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if rows.size:
        if rows.min(initial=0) < 0 or rows.max(initial=0) >= V.shape[0]:
            raise ValueError("row index out of bounds")
        if cols.min(initial=0) < 0 or cols.max(initial=0) >= V.shape[1]:
            raise ValueError("column index out of bounds")
        flat = rows * V.shape[1] + cols
        if np.unique(flat).size != flat.size:
            raise ValueError("duplicate indices in the observation set")
    out = V.copy()
    out[rows, cols] = (V[rows, cols] + 2.0 * gamma * values) / (1.0 + 2.0 * gamma)
    return out


def prox_affine_map_least_squares(A_mats, b, gamma, V):
    """Prox of ``f(X) = ||trace-map(X) - b||^2`` for measurement matrices ``A_i``.

    Vectorizes column-major: with ``M`` stacking ``vec(A_i)^T`` row by row,
    solves ``(I + 2 gamma M^T M) vec(Y) = vec(V) + 2 gamma M^T b`` and
    reshapes back.  Zero measurements return ``V`` unchanged.
    """
    V = np.asarray(V, dtype=float)
    A_mats = np.asarray(A_mats, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    if A_mats.size == 0 or len(A_mats) == 0:
        return V.copy()
    if A_mats.ndim != 3 or A_mats.shape[1:] != V.shape:
        raise ValueError(
            f"measurement matrices of shape {A_mats.shape} do not match V {V.shape}"
        )
    if A_mats.shape[0] != b.size:
        raise ValueError("number of measurements does not match b")
    # row i is vec(A_i) column-major
    M = A_mats.transpose(0, 2, 1).reshape(A_mats.shape[0], -1)
    y = prox_least_squares(M, b, gamma, V.ravel(order="F"))
    return y.reshape(V.shape, order="F")


def _fa_prox_core(Sigma, gamma, X0, d0, grad_tol, max_iters, warm=None):
    """Inexact augmented-Lagrangian solve of the factor-analysis prox.

    Returns ``(Xt, dt, Lam, iterations)``; ``warm`` may carry the triple
    from a previous solve with nearby inputs.
    """
    p = d0.size
    rho = max(1.0 / gamma, 10.0)
    if warm is None:
        Lam = np.zeros((p, p))
        Xt = project_psd_cone(X0)
        dt = np.maximum(d0, 0.0)
    else:
        Xt, dt, Lam = (a.copy() for a in warm)
    residual = np.inf
    feas_prev = np.inf
    inner_tol = 1e-2
    total = 0

    def al_grad(Xc, dc):
        R = Sigma - Xc - np.diag(dc)
        S = project_psd_cone(Lam - rho * (Sigma - np.diag(dc)))
        return -2.0 * R + (Xc - X0) / gamma, -2.0 * np.diag(R) + (
            dc - d0
        ) / gamma + np.diag(S)

    while total < max_iters:
        # smooth curvature: 4 from the residual term, 1/gamma from the prox
        # centering, rho from the augmented penalty
        step = 1.0 / (4.0 + 1.0 / gamma + rho)
        # inner loop: accelerated projected gradient (with gradient restart)
        # on the augmented Lagrangian over the product set {X psd} x {d >= 0};
        # plain descent cannot keep up once the penalty grows
        Yx, yd = Xt, dt
        theta = 1.0
        while total < max_iters:
            GX, gd = al_grad(Yx, yd)
            Xn = project_psd_cone(Yx - step * GX)
            dn = np.maximum(yd - step * gd, 0.0)
            total += 1
            move = np.sqrt(
                np.linalg.norm(Xn - Xt) ** 2 + np.linalg.norm(dn - dt) ** 2
            ) / step
            if move <= inner_tol:
                # certify with a plain step from the new point
                GX, gd = al_grad(Xn, dn)
                Xc = project_psd_cone(Xn - step * GX)
                dc = np.maximum(dn - step * gd, 0.0)
                gap = np.sqrt(
                    np.linalg.norm(Xc - Xn) ** 2 + np.linalg.norm(dc - dn) ** 2
                ) / step
                if gap <= inner_tol:
                    Xt, dt = Xn, dn
                    break
            if float(np.sum((Yx - Xn) * (Xn - Xt))) + float(
                (yd - dn) @ (dn - dt)
            ) > 0.0:
                theta = 1.0  # restart the momentum when it points uphill
            theta_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * theta * theta))
            w = (theta - 1.0) / theta_next
            Yx = Xn + w * (Xn - Xt)
            yd = dn + w * (dn - dt)
            theta = theta_next
            Xt, dt = Xn, dn
        E = Sigma - np.diag(dt)
        Lam = project_psd_cone(Lam - rho * E)
        # first-order optimality of the true problem at the current pair
        R = Sigma - Xt - np.diag(dt)
        GX = -2.0 * R + (Xt - X0) / gamma
        gd = -2.0 * np.diag(R) + (dt - d0) / gamma + np.diag(Lam)
        Xs = project_psd_cone(Xt - step * GX)
        ds = np.maximum(dt - step * gd, 0.0)
        stat = np.sqrt(
            np.linalg.norm(Xs - Xt) ** 2 + np.linalg.norm(ds - dt) ** 2
        ) / step
        feas = float(np.linalg.norm(np.minimum(np.linalg.eigvalsh(E), 0.0)))
        comp = abs(float(np.sum(Lam * E))) / (1.0 + float(np.linalg.norm(Lam)))
        residual = max(stat, feas, comp)
        if residual <= grad_tol:
            return Xt, dt, Lam, total
        # inner accuracy follows the outer progress; the penalty grows when
        # feasibility stops improving geometrically
        inner_tol = max(0.5 * grad_tol, 0.1 * residual)
        if feas > 0.25 * feas_prev:
            rho = min(rho * 4.0, 1e12)
        feas_prev = feas
    raise NumericalError(
        f"factor-analysis prox stalled at optimality residual {residual:.3e}",
        residual=float(residual),
    )


def prox_fa_loss(Sigma, gamma, X, D_diag, grad_tol=1e-6, max_iters=20000):
    """Prox of the factor-analysis loss by an augmented-Lagrangian scheme.

    Minimizes ``||Sigma - Xt - diag(dt)||_F^2 + (||Xt - X||_F^2
    + ||dt - d||^2) / (2 gamma)`` subject to ``Xt`` psd, ``dt >= 0`` and
    ``Sigma - diag(dt)`` psd.  The simple constraints are kept as exact
    projections inside a projected-gradient inner loop; the shifted-cone
    constraint carries a psd multiplier updated by the method of
    multipliers.  Typical solutions sit where ``Sigma - diag(dt)`` is
    singular, a tangential geometry on which plain alternating projections
    stall sublinearly; the multiplier formulation keeps a linear rate
    there.

    Returns ``(Xt, dt)`` once the first-order optimality residual (the
    largest of the projected-gradient, feasibility and complementarity
    measures) drops below ``grad_tol``.  Exhausting the iteration budget
    raises :class:`NumericalError` carrying the achieved residual.
    """
    Sigma = np.asarray(Sigma, dtype=float)
    X = np.asarray(X, dtype=float)
    d = np.asarray(D_diag, dtype=float).ravel()
    p = d.size
    if Sigma.shape != (p, p) or X.shape != (p, p):
        raise ValueError("Sigma, X and D_diag dimensions disagree")
    if np.max(np.abs(Sigma - Sigma.T), initial=0.0) > 1e-8 * max(
        1.0, float(np.max(np.abs(Sigma), initial=0.0))
    ):
        raise ValueError("Sigma must be symmetric")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    Xt, dt, _, _ = _fa_prox_core(
        Sigma, gamma, 0.5 * (X + X.T), d, grad_tol, max_iters
    )
    return Xt, dt


# ---------------------------------------------------------------------------
# smoothing wrapper for nonsmooth convex costs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmoothedFunction:
    """Moreau smoothing of a prox-capable convex function.

    Wraps ``phi`` (given by ``value_fn`` and ``prox_fn(x, t)``) into the
    envelope with parameter ``nu`` plus a ``(beta_inner/2)||.||^2`` term,
    which is strongly convex and has a ``(1/nu)``-Lipschitz gradient, so the
    smooth-loss machinery applies unchanged.
    """

    value_fn: object
    prox_fn: object
    nu: float
    beta_inner: float = 0.0

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if self.beta_inner < 0:
            raise ValueError("beta_inner must be nonnegative")


def smoothed_value(fun, x):
    """Envelope value plus the inner Tikhonov term at ``x``."""
    x = np.asarray(x, dtype=float)
    p = fun.prox_fn(x, fun.nu)
    env = fun.value_fn(p) + float(np.sum((p - x) ** 2)) / (2.0 * fun.nu)
    return env + 0.5 * fun.beta_inner * float(np.sum(x * x))


def smoothed_prox(fun, gamma, x):
    """Prox of the smoothed function with a single base-prox call.

    With ``c = 1/(gamma*beta + 1)`` and ``t = gamma*c``:

        ``c*x + t/(t + nu) * (prox_{(t + nu) phi}(c*x) - c*x)``.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    x = np.asarray(x, dtype=float)
    c = 1.0 / (gamma * fun.beta_inner + 1.0)
    t = gamma * c
    cx = c * x
    return cx + (t / (t + fun.nu)) * (fun.prox_fn(cx, t + fun.nu) - cx)


def smoothed_gradient(fun, x):
    """Gradient of the smoothed function: ``(x - prox_{nu phi}(x))/nu + beta x``."""
    x = np.asarray(x, dtype=float)
    return (x - fun.prox_fn(x, fun.nu)) / fun.nu + fun.beta_inner * x
