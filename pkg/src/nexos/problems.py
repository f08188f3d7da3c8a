"""Problem families: losses, constraint sets, synthetic generators, metrics."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg

from .core import ProjectableSet, SmoothLoss
from . import operators as ops

__all__ = (
    "Family",
    "ProblemInstance",
    "LeastSquaresLoss",
    "SmoothedFunctionLoss",
    "MaskedLeastSquaresLoss",
    "AffineMapLeastSquaresLoss",
    "FactorAnalysisLoss",
    "SparseBoxSet",
    "RankSpectralSet",
    "FactorAnalysisSet",
    "FinitePointSet",
    "CustomSet",
    "build_sparse_regression",
    "build_rank_minimization",
    "build_matrix_completion",
    "build_factor_analysis",
    "generate_sr_instance",
    "generate_rm_instance",
    "metric_support_recovery",
    "metric_rms",
    "metric_explained_variance",
    "standardize_columns",
    "normal_samples",
)


class Family(Enum):
    SR = "sr"
    RM = "rm"
    MC = "mc"
    FA = "fa"
    CUSTOM = "custom"


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------


class SmoothedFunctionLoss(SmoothLoss):
    """Envelope-smoothed nonsmooth convex cost as a solver-ready loss.

    Wraps a prox-capable function through :class:`nexos.SmoothedFunction`:
    the loss value is the Moreau envelope plus the wrapper's Tikhonov term,
    and one base-prox call evaluates each prox exactly.
    """

    def __init__(self, fun, dim):
        self.fun = fun
        self._dim = int(dim)

    @property
    def dim(self):
        return self._dim

    def value(self, x):
        return ops.smoothed_value(self.fun, x)

    def gradient(self, x):
        return ops.smoothed_gradient(self.fun, x)

    def prox(self, z, gamma):
        return ops.smoothed_prox(self.fun, gamma, z)


class LeastSquaresLoss(SmoothLoss):
    """``f(x) = ||A x - b||^2`` with a cached prox factorization per gamma.

    The factorization is built lazily the first time a gamma is seen and
    reused for every later prox call; a lock makes the build safe when
    concurrent solves share the instance.
    """

    def __init__(self, A, b):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        if A.shape[0] != b.size:
            raise ValueError(f"A has {A.shape[0]} rows but b has {b.size} entries")
        self.A = A
        self.b = b
        self._Atb = A.T @ b
        self._factors = {}
        self._lock = threading.Lock()

    @property
    def dim(self):
        return self.A.shape[1]

    def value(self, x):
        r = self.A @ x - self.b
        return float(r @ r)

    def gradient(self, x):
        return 2.0 * (self.A.T @ (self.A @ x - self.b))

    def prox(self, z, gamma):
        inverse, shift = self._factor(gamma)
        if inverse is None:
            return z + shift
        return inverse @ z + shift

    def _factor(self, gamma):
        f = self._factors.get(gamma)
        if f is None:
            with self._lock:
                f = self._factors.get(gamma)
                if f is None:
                    f = self._build_factor(gamma)
                    self._factors[gamma] = f
        return f

    def _build_factor(self, gamma):
        # dense inverse of (I + 2 gamma A^T A) derived from the Cholesky
        # factorization of the smaller Gram matrix; the system is well
        # conditioned (identity plus a psd term scaled by gamma), so one
        # cached matrix turns every prox call into a single matvec
        kind, chol = ops._ls_factor(self.A, gamma)
        n = self.dim
        if kind == "identity":
            inverse = None
        elif kind == "woodbury":
            T = scipy.linalg.cho_solve(chol, self.A, check_finite=False)
            inverse = np.eye(n) - 2.0 * gamma * (self.A.T @ T)
        else:
            inverse = scipy.linalg.cho_solve(chol, np.eye(n), check_finite=False)
        w = (2.0 * gamma) * self._Atb
        shift = w if inverse is None else inverse @ w
        return inverse, shift


class MaskedLeastSquaresLoss(SmoothLoss):
    """Squared error over the observed entries of a partially known matrix.

    The variable is an ``m x d`` matrix stored column-major in a flat
    vector; ``f(X) = sum_{(i,j) in Omega} (X_ij - Z_ij)^2``.
    """

    def __init__(self, values, rows, cols, shape):
        self.shape = (int(shape[0]), int(shape[1]))
        self.rows = np.asarray(rows, dtype=int)
        self.cols = np.asarray(cols, dtype=int)
        self.values = np.asarray(values, dtype=float).ravel()
        if not (self.rows.shape == self.cols.shape == self.values.shape):
            raise ValueError("values, rows, cols must have matching shapes")
        if self.rows.size:
            if self.rows.min() < 0 or self.rows.max() >= self.shape[0]:
                raise ValueError("row index out of bounds")
            if self.cols.min() < 0 or self.cols.max() >= self.shape[1]:
                raise ValueError("column index out of bounds")
            flat = self.rows * self.shape[1] + self.cols
            if np.unique(flat).size != flat.size:
                raise ValueError("duplicate indices in the observation set")
        # flat (column-major) positions of the observed entries
        self._flat = self.cols * self.shape[0] + self.rows

    @property
    def dim(self):
        return self.shape[0] * self.shape[1]

    def value(self, x):
        r = x[self._flat] - self.values
        return float(r @ r)

    def gradient(self, x):
        g = np.zeros_like(x)
        g[self._flat] = 2.0 * (x[self._flat] - self.values)
        return g

    def prox(self, z, gamma):
        out = z.copy()
        out[self._flat] = (z[self._flat] + 2.0 * gamma * self.values) / (
            1.0 + 2.0 * gamma
        )
        return out


class AffineMapLeastSquaresLoss(LeastSquaresLoss):
    """``f(X) = ||(tr(A_1^T X), ..., tr(A_k^T X)) - b||^2`` on a flat matrix.

    Reduces to plain least squares on the column-major vectorization, so the
    cached-factorization machinery is inherited unchanged.
    """

    def __init__(self, A_mats, b, shape=None):
        A_mats = np.asarray(A_mats, dtype=float)
        if A_mats.ndim == 3 and A_mats.shape[0] > 0:
            shape = A_mats.shape[1:]
            M = A_mats.transpose(0, 2, 1).reshape(A_mats.shape[0], -1)
        elif A_mats.size == 0:
            if shape is None and A_mats.ndim == 3:
                shape = A_mats.shape[1:]
            if shape is None:
                raise ValueError("shape is required when no measurements are given")
            M = np.zeros((0, int(shape[0]) * int(shape[1])))
        else:
            raise ValueError("A_mats must be a (k, m, d) stack of matrices")
        super().__init__(M, b)
        self.shape = (int(shape[0]), int(shape[1]))


class FactorAnalysisLoss(SmoothLoss):
    """Fit residual ``||Sigma - X - diag(d)||_F^2`` over the pair ``(X, d)``.

    The variable is ``vec(X)`` column-major followed by ``d``.  The domain
    constraints (``X`` psd, ``d >= 0``, ``Sigma - diag(d)`` psd) live inside
    the prox; ``value`` and ``gradient`` cover the smooth quadratic part.

    The prox is iterative; successive calls within one solve see slowly
    drifting inputs, so the multiplier and iterates warm-start from the
    previous call.  The warm state is thread-local: concurrent solves
    sharing one instance never observe each other's iterates.
    """

    def __init__(self, Sigma):
        Sigma = np.asarray(Sigma, dtype=float)
        if Sigma.ndim != 2 or Sigma.shape[0] != Sigma.shape[1]:
            raise ValueError("Sigma must be square")
        scale = max(1.0, float(np.max(np.abs(Sigma), initial=0.0)))
        if np.max(np.abs(Sigma - Sigma.T), initial=0.0) > 1e-8 * scale:
            raise ValueError("Sigma must be symmetric")
        if np.linalg.eigvalsh(0.5 * (Sigma + Sigma.T)).min() < -1e-8 * scale:
            raise ValueError("Sigma must be positive semidefinite")
        self.Sigma = 0.5 * (Sigma + Sigma.T)
        self.p = Sigma.shape[0]
        self._warm = threading.local()

    @property
    def dim(self):
        return self.p * self.p + self.p

    def split(self, x):
        """Unpack the flat iterate into the matrix and diagonal parts."""
        p = self.p
        X = x[: p * p].reshape((p, p), order="F")
        return X, x[p * p :]

    def join(self, X, d):
        """Pack a matrix / diagonal pair back into a flat iterate."""
        return np.concatenate([X.ravel(order="F"), d])

    def value(self, x):
        X, d = self.split(x)
        R = self.Sigma - X - np.diag(d)
        return float(np.sum(R * R))

    def gradient(self, x):
        X, d = self.split(x)
        R = self.Sigma - X - np.diag(d)
        return self.join(-2.0 * R, -2.0 * np.diag(R))

    def prox(self, z, gamma):
        X, d = self.split(z)
        warm = getattr(self._warm, "state", None)
        try:
            Xt, dt, lam, _ = ops._fa_prox_core(
                self.Sigma, gamma, 0.5 * (X + X.T), d,
                grad_tol=1e-6, max_iters=20000, warm=warm,
            )
        except ops.NumericalError:
            # a stale warm state can mislead the multiplier; retry cold
            Xt, dt, lam, _ = ops._fa_prox_core(
                self.Sigma, gamma, 0.5 * (X + X.T), d,
                grad_tol=1e-6, max_iters=20000,
            )
        self._warm.state = (Xt, dt, lam)
        return self.join(Xt, dt)


# ---------------------------------------------------------------------------
# constraint sets
# ---------------------------------------------------------------------------


class SparseBoxSet(ProjectableSet):
    """``{x : card(x) <= k, ||x||_inf <= Gamma}``."""

    def __init__(self, k, Gamma, dim):
        dim = int(dim)
        if not 1 <= k <= dim:
            raise ValueError(f"k={k} out of range for dimension {dim}")
        if Gamma <= 0:
            raise ValueError("Gamma must be positive")
        self.k = int(k)
        self.Gamma = float(Gamma)
        self._dim = dim

    @property
    def dim(self):
        return self._dim

    def project(self, x):
        # parameters were validated at construction; mirror of
        # operators.project_sparse_box without its per-call checks
        x = np.asarray(x, dtype=float)
        order = np.argsort(-np.abs(x), kind="stable")
        out = np.zeros_like(x)
        keep = order[: self.k]
        out[keep] = np.clip(x[keep], -self.Gamma, self.Gamma)
        return out

    def contains(self, x, tol=1e-9):
        x = self._check_point(x)
        if np.max(np.abs(x), initial=0.0) > self.Gamma + tol:
            return False
        return int(np.count_nonzero(np.abs(x) > tol)) <= self.k


class RankSpectralSet(ProjectableSet):
    """``{X : rank(X) <= r, ||X||_2 <= Gamma}`` on a flat column-major buffer."""

    def __init__(self, r, Gamma, rows, cols):
        rows, cols = int(rows), int(cols)
        if not 1 <= r <= min(rows, cols):
            raise ValueError(f"r={r} out of range for shape ({rows}, {cols})")
        if Gamma <= 0:
            raise ValueError("Gamma must be positive")
        self.r = int(r)
        self.Gamma = float(Gamma)
        self.shape = (rows, cols)

    @property
    def dim(self):
        return self.shape[0] * self.shape[1]

    def project(self, x):
        x = self._check_point(x)
        X = x.reshape(self.shape, order="F")
        return ops.project_rank_spectral(X, self.r, self.Gamma).ravel(order="F")

    def contains(self, x, tol=1e-9):
        x = self._check_point(x)
        s = np.linalg.svd(x.reshape(self.shape, order="F"), compute_uv=False)
        if s.size and s[0] > self.Gamma + tol:
            return False
        # numerical rank at absolute threshold 1e-10, scaled by the top value
        cut = max(1e-10, 1e-10 * (s[0] if s.size else 0.0))
        return int(np.count_nonzero(s > cut)) <= self.r


class FactorAnalysisSet(ProjectableSet):
    """Pairs ``(X, d)`` with ``X`` low-rank and bounded, ``d`` nonnegative."""

    def __init__(self, r, Gamma, p):
        p = int(p)
        if not 1 <= r <= p:
            raise ValueError(f"r={r} out of range for size {p}")
        if Gamma <= 0:
            raise ValueError("Gamma must be positive")
        self.r = int(r)
        self.Gamma = float(Gamma)
        self.p = p

    @property
    def dim(self):
        return self.p * self.p + self.p

    def split(self, x):
        p = self.p
        return x[: p * p].reshape((p, p), order="F"), x[p * p :]

    def project(self, x):
        x = self._check_point(x)
        X, d = self.split(x)
        Xp, dp = ops.project_fa_set(X, d, self.r, self.Gamma)
        return np.concatenate([Xp.ravel(order="F"), dp])

    def contains(self, x, tol=1e-9):
        x = self._check_point(x)
        X, d = self.split(x)
        if np.min(d, initial=0.0) < -tol:
            return False
        if np.max(np.abs(X - X.T), initial=0.0) > max(tol, 1e-10):
            return False
        s = np.linalg.svd(X, compute_uv=False)
        if s.size and s[0] > self.Gamma + tol:
            return False
        cut = max(1e-10, 1e-10 * (s[0] if s.size else 0.0))
        return int(np.count_nonzero(s > cut)) <= self.r


class FinitePointSet(ProjectableSet):
    """An explicit finite set of points.

    Projection returns the nearest point; exact distance ties go to the
    lexicographically smallest candidate so repeated runs agree bit for bit.
    """

    def __init__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.size == 0:
            raise ValueError("the point set must be nonempty")
        self.points = pts

    @property
    def dim(self):
        return self.points.shape[1]

    def project(self, x):
        x = self._check_point(x)
        d2 = np.sum((self.points - x) ** 2, axis=1)
        best = d2.min()
        ties = self.points[d2 <= best * (1.0 + 1e-12) + 1e-300]
        return np.array(min(map(tuple, ties)))

    def contains(self, x, tol=1e-9):
        x = self._check_point(x)
        return bool(np.any(np.all(np.abs(self.points - x) <= tol, axis=1)))


class CustomSet(ProjectableSet):
    """User-supplied projection wrapped in the set interface."""

    def __init__(self, dim, project_fn, contains_fn=None):
        self._dim = int(dim)
        self._project_fn = project_fn
        self._contains_fn = contains_fn

    @property
    def dim(self):
        return self._dim

    def project(self, x):
        x = self._check_point(x)
        return np.asarray(self._project_fn(x), dtype=float)

    def contains(self, x, tol=1e-9):
        x = self._check_point(x)
        if self._contains_fn is not None:
            return bool(self._contains_fn(x))
        return self.distance(x) <= tol


# ---------------------------------------------------------------------------
# instances and builders
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """A loss, a compatible constraint set, and a family tag."""

    loss: SmoothLoss
    set: ProjectableSet
    family: Family = Family.CUSTOM
    ground_truth: np.ndarray | None = None

    def __post_init__(self):
        if self.loss.dim != self.set.dim:
            raise ValueError(
                f"loss dimension {self.loss.dim} and set dimension "
                f"{self.set.dim} disagree"
            )


def build_sparse_regression(A, b, k, Gamma):
    """Sparse regression: least squares over the sparse box."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    loss = LeastSquaresLoss(A, b)
    set_ = SparseBoxSet(k, Gamma, A.shape[1])
    return ProblemInstance(loss=loss, set=set_, family=Family.SR)


def build_rank_minimization(A_mats, b, r, Gamma, shape=None):
    """Affine rank minimization: trace-map least squares over low rank."""
    loss = AffineMapLeastSquaresLoss(A_mats, b, shape=shape)
    set_ = RankSpectralSet(r, Gamma, *loss.shape)
    return ProblemInstance(loss=loss, set=set_, family=Family.RM)


def build_matrix_completion(Z_obs, Omega, shape, r, Gamma=None):
    """Matrix completion: masked least squares over low rank.

    ``Omega`` is a pair of index arrays (rows, cols) aligned with the
    observed values ``Z_obs``.  When ``Gamma`` is omitted it is derived from
    the data: fill every missing entry with the largest absolute observed
    value and take the Frobenius norm of that surrogate, which upper-bounds
    the spectral norm of any completion consistent with the scale.
    """
    rows, cols = Omega
    loss = MaskedLeastSquaresLoss(Z_obs, rows, cols, shape)
    if Gamma is None:
        fill = float(np.max(np.abs(loss.values), initial=0.0))
        Y = np.full(loss.shape, fill)
        Y[loss.rows, loss.cols] = loss.values
        Gamma = float(np.linalg.norm(Y))
        if Gamma <= 0:
            raise ValueError("cannot derive Gamma from all-zero observations")
    set_ = RankSpectralSet(r, Gamma, *loss.shape)
    return ProblemInstance(loss=loss, set=set_, family=Family.MC)


def build_factor_analysis(Sigma, r, Gamma):
    """Low-rank factor analysis: split a psd matrix into low rank plus diagonal."""
    loss = FactorAnalysisLoss(Sigma)
    set_ = FactorAnalysisSet(r, Gamma, loss.p)
    return ProblemInstance(loss=loss, set=set_, family=Family.FA)


# ---------------------------------------------------------------------------
# synthetic data
# ---------------------------------------------------------------------------


def normal_samples(rng, size):
    """Standard normals from PCG64 uniforms via the Box-Muller transform.

    The construction is pinned so other implementations can reproduce the
    statistics (not the stream) from the documented recipe.
    """
    shape = (size,) if np.isscalar(size) else tuple(size)
    n = int(np.prod(shape))
    m = (n + 1) // 2
    u1 = rng.random(m)
    u2 = rng.random(m)
    radius = np.sqrt(-2.0 * np.log(np.maximum(u1, np.finfo(float).tiny)))
    z = np.concatenate([radius * np.cos(2 * np.pi * u2), radius * np.sin(2 * np.pi * u2)])
    return z[:n].reshape(shape)


def generate_sr_instance(m, seed, card=None, signal_range=None):
    """Synthetic sparse-regression data.

    ``A`` is ``m x 2m`` standard normal; the signal has ``round(m/5)``
    (round-half-to-even) nonzero entries drawn uniformly from ``[-1, 1]`` on
    a uniformly chosen support; observations are ``A x + v`` with noise
    variance ``sigma2 = ||A x||^2 / (400 m)``, which keeps the amplitude
    signal-to-noise ratio ``||A x|| / ||v||`` at about 20.

    ``card`` overrides the signal cardinality and ``signal_range=(lo, hi)``
    draws magnitudes from ``[lo, hi]`` with random signs instead, for
    benchmark batteries that need identification-driven optima.

    Returns ``(A, b, x_true, sigma2)``, fully determined by the arguments.
    """
    if m < 5:
        raise ValueError("m must be at least 5")
    rng = np.random.default_rng(seed)
    d = 2 * m
    A = normal_samples(rng, (m, d))
    k = int(np.round(m / 5)) if card is None else int(card)
    if not 1 <= k <= d:
        raise ValueError(f"card={k} out of range for dimension {d}")
    support = rng.permutation(d)[:k]
    x_true = np.zeros(d)
    if signal_range is None:
        x_true[support] = rng.uniform(-1.0, 1.0, size=k)
    else:
        lo, hi = signal_range
        x_true[support] = rng.choice([-1.0, 1.0], k) * rng.uniform(lo, hi, k)
    signal = A @ x_true
    sigma2 = float(signal @ signal) / (400.0 * m)
    b = signal + np.sqrt(sigma2) * normal_samples(rng, m)
    return A, b, x_true, sigma2


def generate_rm_instance(m, seed, Gamma=np.inf, oversample=8.0):
    """Synthetic affine-rank-minimization data.

    Sizes follow the sparse-regression convention: ``d = 2m`` columns and
    target rank ``round(m/10)``.  The measurement count is
    ``round(oversample * m * d)`` standard normal trace maps; the source
    problem leaves this count open and the default oversampling of 8 puts
    recovery errors in the low-noise regime the family is reported in.
    The ground truth keeps the top ``r`` singular values of a standard
    normal matrix and zeroes any of them exceeding ``Gamma``; measurements
    get noise by the same signal-to-noise rule as the sparse generator,
    with the measurement count in place of ``m``.

    Returns ``(A_mats, b, X_true)``.
    """
    if m < 10:
        raise ValueError("m must be at least 10")
    if oversample <= 0:
        raise ValueError("oversample must be positive")
    rng = np.random.default_rng(seed)
    d = 2 * m
    r = max(int(np.round(m / 10)), 1)
    n_meas = max(int(np.round(oversample * m * d)), 1)
    A_mats = normal_samples(rng, (n_meas, m, d))
    G = normal_samples(rng, (m, d))
    U, s, Vt = np.linalg.svd(G, full_matrices=False)
    s[r:] = 0.0
    s[s > Gamma] = 0.0
    X_true = (U * s) @ Vt
    signal = np.tensordot(A_mats, X_true, axes=2)
    sigma2 = float(signal @ signal) / (400.0 * n_meas)
    b = signal + np.sqrt(sigma2) * normal_samples(rng, n_meas)
    return A_mats, b, X_true


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def metric_support_recovery(x, x_true):
    """Percentage of coordinates whose sign pattern matches the truth."""
    x = np.asarray(x, dtype=float)
    x_true = np.asarray(x_true, dtype=float)
    if x.shape != x_true.shape:
        raise ValueError("dimension mismatch")
    return 100.0 * float(np.mean(np.sign(x) == np.sign(x_true)))


def metric_rms(pred, actual):
    """Root-mean-square error between two arrays of equal shape."""
    pred = np.asarray(pred, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if pred.shape != actual.shape:
        raise ValueError("dimension mismatch")
    return float(np.sqrt(np.mean((pred - actual) ** 2)))


def metric_explained_variance(X, D, Sigma, r):
    """Share of the residual covariance captured by the leading ``r`` factors.

    ``sum_{i<=r} s_i(X) / sum_i s_i(Sigma - D)`` with singular values in
    decreasing order; ``D`` may be a diagonal matrix or its diagonal vector.
    """
    X = np.asarray(X, dtype=float)
    D = np.asarray(D, dtype=float)
    if D.ndim == 1:
        D = np.diag(D)
    Sigma = np.asarray(Sigma, dtype=float)
    if not 1 <= r <= min(X.shape):
        raise ValueError(f"r={r} out of range for shape {X.shape}")
    denom = float(np.sum(np.linalg.svd(Sigma - D, compute_uv=False)))
    if denom == 0.0:
        raise ValueError("Sigma - D has no singular values to explain")
    num = float(np.sum(np.linalg.svd(X, compute_uv=False)[:r]))
    return num / denom


def standardize_columns(X):
    """Zero-mean, unit-deviation columns, ignoring missing (NaN) entries.

    Columns with no spread are centered only.  Returns the standardized
    array together with the per-column means and deviations used.
    """
    X = np.asarray(X, dtype=float)
    mean = np.nanmean(X, axis=0)
    std = np.nanstd(X, axis=0)
    safe = np.where(std > 0, std, 1.0)
    return (X - mean) / safe, mean, std
