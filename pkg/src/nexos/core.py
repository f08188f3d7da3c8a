"""Domain types shared by the whole solver: losses, sets, penalties, settings."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = (
    "NumericalError",
    "SmoothLoss",
    "ProjectableSet",
    "PenalizedIndicator",
    "SolverSettings",
    "SolveStatus",
    "StageLog",
    "SolveResult",
    "objective_original",
    "objective_penalized",
    "stationarity_residual",
)


class NumericalError(RuntimeError):
    """An iterative subroutine missed its target accuracy.

    Carries the best residual reached so the caller can decide whether the
    result is still usable.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SmoothLoss(ABC):
    """A smooth convex loss ``f`` with gradient and proximal operator.

    Instances bundle the three evaluations every splitting step needs:
    ``value(x)``, ``gradient(x)`` and ``prox(z, gamma)``, the latter being
    the minimizer of ``f(y) + ||y - z||^2 / (2 gamma)``.  Iterates live in a
    flat dense vector; losses over matrix variables interpret the buffer
    column-major with their own ``(rows, cols)`` metadata.

    Implementations must be immutable after construction.  Lazily built
    per-``gamma`` factorizations are the only allowed internal state and must
    be guarded so concurrent solves can share one instance.
    """

    #: optional curvature metadata (strong convexity / smoothness moduli);
    #: never used numerically by the solver
    strong_convexity = None
    smoothness = None

    @property
    @abstractmethod
    def dim(self):
        """Ambient (flat) dimension of the variable."""

    @abstractmethod
    def value(self, x):
        """Evaluate ``f(x)``."""

    @abstractmethod
    def gradient(self, x):
        """Evaluate ``grad f(x)``."""

    @abstractmethod
    def prox(self, z, gamma):
        """Minimize ``f(y) + ||y - z||^2 / (2 gamma)`` over ``y``."""

    def _check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(
                f"point has shape {x.shape}, loss expects ({self.dim},)"
            )
        return x


class ProjectableSet(ABC):
    """A closed set with membership test, Euclidean projection and distance.

    The sets of interest are prox-regular: the projection is single-valued
    near the points the solver converges to.  Elsewhere implementations must
    break ties deterministically (documented per family).
    """

    @property
    @abstractmethod
    def dim(self):
        """Ambient (flat) dimension."""

    @abstractmethod
    def project(self, x):
        """Euclidean projection of ``x`` onto the set."""

    @abstractmethod
    def contains(self, x, tol=1e-9):
        """Whether ``x`` is a member, up to feasibility tolerance ``tol``."""

    def distance(self, x):
        """Euclidean distance from ``x`` to the set, ``||x - project(x)||``."""
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x - self.project(x)))

    def _check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(
                f"point has shape {x.shape}, set expects ({self.dim},)"
            )
        return x


@dataclass(frozen=True)
class PenalizedIndicator:
    """Quadratic exterior penalty replacing the indicator of a set.

    ``value(x) = d(x)^2 / (2 mu) + (beta / 2) ||x||^2`` where ``d`` is the
    Euclidean distance to ``set``.  Finite everywhere, equal to the plain
    Tikhonov term on the set, and nonincreasing in ``mu`` pointwise.
    """

    set: ProjectableSet
    mu: float
    beta: float = 0.0

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.beta < 0:
            raise ValueError(f"beta must be nonnegative, got {self.beta}")

    def value(self, x):
        x = self.set._check_point(x)
        d = self.set.distance(x)
        return d * d / (2.0 * self.mu) + 0.5 * self.beta * float(x @ x)


@dataclass(frozen=True, eq=False)
class SolverSettings:
    """All tunables of the two-level solve.

    Parameters
    ----------
    beta : float
        Tikhonov regularization weight of the objective.
    mu_init, mu_min : float
        First and smallest admissible penalty parameter of the outer
        continuation schedule.
    rho : float
        Multiplicative decrease factor of the penalty, in (0, 1).
    gamma : float
        Proximal parameter of the inner splitting iteration.
    eps_fixed_point : float
        Inner stopping tolerance on the fixed-point gap ``||x - y||``.
    delta_stop : float
        Outer stopping tolerance on the feasible-vs-penalized objective gap.
    max_inner_iters : int
        Iteration budget of one inner solve.
    max_outer_stages : int or None
        Cap on the number of penalty stages; ``None`` derives the cap from
        the ``mu_init -> mu_min`` schedule.
    z_init : ndarray or None
        Starting point; ``None`` means the zero vector.
    strict : bool
        If True, abort with ``InnerBudgetExhausted`` when an inner solve
        misses its tolerance; the default policy records the miss and moves
        to the next stage with the best available iterate.
    """

    beta: float = 1e-8
    mu_init: float = 2.0
    mu_min: float = 1e-8
    rho: float = 0.5
    gamma: float = 1e-3
    eps_fixed_point: float = 1e-4
    delta_stop: float = 1e-6
    max_inner_iters: int = 1000
    max_outer_stages: int | None = None
    z_init: np.ndarray | None = None
    strict: bool = False

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.mu_init <= 0 or self.mu_min <= 0:
            raise ValueError("mu_init and mu_min must be positive")
        if not self.mu_min < self.mu_init:
            raise ValueError("mu_min must be smaller than mu_init")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (0, 1)")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.eps_fixed_point <= 0 or self.delta_stop <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_inner_iters < 1:
            raise ValueError("max_inner_iters must be at least 1")
        if self.max_outer_stages is not None and self.max_outer_stages < 1:
            raise ValueError("max_outer_stages must be at least 1")

    def stage_budget(self):
        """Number of stages until the schedule crosses ``mu_min``."""
        if self.max_outer_stages is not None:
            return self.max_outer_stages
        # mu_init * rho^n < mu_min after n multiplications; allow them all
        n = int(np.ceil(np.log(self.mu_min / self.mu_init) / np.log(self.rho)))
        return max(n + 1, 1)


class SolveStatus(Enum):
    """Terminal condition of a solve."""

    CONVERGED = "Converged"
    MU_FLOOR_REACHED = "MuFloorReached"
    INNER_BUDGET_EXHAUSTED = "InnerBudgetExhausted"


@dataclass(frozen=True, eq=False)
class StageLog:
    """Record of one penalty stage.

    ``final_gap`` is the fixed-point gap at exit, ``stop_gap`` the outer
    stopping-criterion value, ``residual_trace`` the per-iteration gap
    sequence when trace collection is on.
    """

    mu: float
    iterations: int
    final_gap: float
    stop_gap: float
    residual_trace: np.ndarray | None = None


@dataclass(frozen=True, eq=False)
class SolveResult:
    """Final iterates and per-stage diagnostics of a solve.

    ``x, y, z`` are the last inner-loop iterates.  ``feasible_point`` is the
    projection of ``x`` onto the constraint set and ``objective_feasible``
    its objective value; it is the value reported to users since the
    penalized iterate itself sits outside the set by construction.
    """

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    feasible_point: np.ndarray
    objective_feasible: float
    objective_penalized: float
    status: SolveStatus
    stages: tuple[StageLog, ...] = field(default_factory=tuple)


def objective_original(loss, beta, x, set_):
    """Constrained objective ``f(x) + (beta/2)||x||^2`` with set membership.

    Returns the finite value when ``x`` belongs to ``set_`` and ``inf``
    otherwise, so callers can compare objectives without special-casing
    infeasibility.
    """
    x = loss._check_point(x)
    if set_.dim != loss.dim:
        raise ValueError(
            f"loss dimension {loss.dim} and set dimension {set_.dim} disagree"
        )
    if not set_.contains(x):
        return float("inf")
    return float(loss.value(x)) + 0.5 * beta * float(x @ x)


def objective_penalized(loss, pen, x):
    """Exterior-point objective ``f(x) + (beta/2)||x||^2 + d(x)^2/(2 mu)``.

    Finite for every ``x``; coincides with :func:`objective_original` on the
    set and underestimates it everywhere else.
    """
    x = loss._check_point(x)
    if pen.set.dim != loss.dim:
        raise ValueError(
            f"loss dimension {loss.dim} and set dimension {pen.set.dim} disagree"
        )
    return float(loss.value(x)) + pen.value(x)


def stationarity_residual(loss, pen, x):
    """Norm of the penalized-objective gradient at ``x``.

    ``||grad f(x) + beta x + (x - project(x)) / mu||`` vanishes exactly at
    stationary points of the penalized problem, which makes it a cheap
    convergence diagnostic for solver output.  The projection is evaluated
    with the set's deterministic tie-break rule.
    """
    x = loss._check_point(x)
    if pen.set.dim != loss.dim:
        raise ValueError(
            f"loss dimension {loss.dim} and set dimension {pen.set.dim} disagree"
        )
    g = loss.gradient(x) + pen.beta * x + (x - pen.set.project(x)) / pen.mu
    return float(np.linalg.norm(g))
