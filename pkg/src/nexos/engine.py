"""Inner splitting loop, outer penalty continuation, multi-start, diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import (
    PenalizedIndicator,
    SolveResult,
    SolveStatus,
    StageLog,
)
from .operators import DrsConstants
from .problems import LeastSquaresLoss, SparseBoxSet

try:  # compiled kernel for the dominant solve shape; pure numpy otherwise
    from ._fast import sparse_box_drs_kernel as _sparse_box_kernel
except ImportError:  # pragma: no cover - numba not installed
    _sparse_box_kernel = None

__all__ = (
    "IterationState",
    "drs_step",
    "solve_inner",
    "solve",
    "multi_start_solve",
    "estimate_tail_rate",
)


@dataclass(frozen=True, eq=False)
class IterationState:
    """Iterates of the inner loop after ``n`` steps; ``gap = ||x - y||``."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    n: int
    gap: float


def drs_step(loss, set_, consts, gamma, mu, beta, z):
    """One Douglas-Rachford step on the penalized problem.

    Updates, in order::

        x  = prox_{gamma f}(z)
        yt = kappa * (2x - z)
        y  = theta * yt + (1 - theta) * project(yt)
        z  = z + y - x

    and returns the new iterates with the fixed-point gap ``||x - y||``.
    ``consts`` must hold the mixing scalars for the current ``mu``.
    """
    x = loss.prox(z, gamma)
    y_tilde = consts.kappa * (2.0 * x - z)
    y = consts.theta * y_tilde + (1.0 - consts.theta) * set_.project(y_tilde)
    z_new = z + y - x
    gap = float(np.linalg.norm(x - y))
    return IterationState(x=x, y=y, z=z_new, n=1, gap=gap)


def solve_inner(loss, set_, settings, mu, z0, trace_sink=None, stage_index=0):
    """Run the inner loop at fixed ``mu`` until the gap meets the tolerance.

    Iterates :func:`drs_step` from ``z0`` until ``||x - y|| <= eps`` or the
    iteration budget runs out.  Always performs at least one step, so a
    warm start that is already an approximate fixed point exits immediately
    with a certified gap.

    Returns
    -------
    state : IterationState
        Final iterates, step count and exit gap.
    trace : ndarray
        Per-iteration gap values.
    hit_tolerance : bool
        Whether the gap tolerance was met within the budget.
    """
    gamma = settings.gamma
    consts = DrsConstants.from_parameters(gamma, mu, settings.beta)
    kappa, theta = consts.kappa, consts.theta
    blend = 1.0 - theta
    z = np.asarray(z0, dtype=float).copy()
    eps = settings.eps_fixed_point

    if (
        _sparse_box_kernel is not None
        and type(set_) is SparseBoxSet
        and isinstance(loss, LeastSquaresLoss)
    ):
        inverse, shift = loss._factor(gamma)
        if inverse is not None:
            gaps_buf = np.empty(settings.max_inner_iters)
            n, gap, x, y, z = _sparse_box_kernel(
                inverse,
                shift,
                z,
                kappa,
                theta,
                set_.k,
                set_.Gamma,
                eps,
                settings.max_inner_iters,
                gaps_buf,
            )
            gaps = gaps_buf[:n].copy()
            if trace_sink is not None:
                for i in range(n):
                    trace_sink(stage_index, mu, i + 1, gaps[i])
            state = IterationState(x=x, y=y, z=z, n=n, gap=gap)
            return state, gaps, gap <= eps

    prox = loss.prox
    project = set_.project
    gaps = []
    hit = False
    x = y = None
    gap = np.inf
    n = 0
    # same update as drs_step, unrolled to keep the hot loop allocation-free
    for n in range(1, settings.max_inner_iters + 1):
        x = prox(z, gamma)
        y_tilde = kappa * (2.0 * x - z)
        y = theta * y_tilde + blend * project(y_tilde)
        z = z + y - x
        diff = x - y
        gap = float(np.sqrt(diff @ diff))
        gaps.append(gap)
        if trace_sink is not None:
            trace_sink(stage_index, mu, n, gap)
        if gap <= eps:
            hit = True
            break
    state = IterationState(x=x, y=y, z=z, n=n, gap=gap)
    return state, np.asarray(gaps), hit


def solve(problem, settings, trace_sink=None, collect_traces=True):
    """Penalty-continuation solve of a loss over a prox-regular set.

    Runs inner solves across the schedule ``mu_init, rho*mu_init, ...``,
    warm-starting each stage at the previous stage's ``z``.  After every
    stage the stopping gap

        ``| (f(Px) + (beta/2)||Px||^2) - (f(x) + penalty(x)) |``

    is evaluated with ``P`` the set projection; the solve ends with status
    ``Converged`` once it drops below ``delta_stop``, ``MuFloorReached``
    when the schedule crosses ``mu_min`` (or the stage budget runs out)
    first, and ``InnerBudgetExhausted`` when an inner solve misses its
    tolerance under ``settings.strict``.

    Parameters
    ----------
    problem : ProblemInstance
        Loss, set and metadata bundle.
    settings : SolverSettings
        All tunables, including the starting point.
    trace_sink : callable, optional
        Called as ``trace_sink(stage_index, mu, iteration, gap)`` after every
        inner iteration; used by the CLI's CSV writer.
    collect_traces : bool
        Attach the per-iteration gap trace to each stage log.

    Returns
    -------
    SolveResult
    """
    loss, set_ = problem.loss, problem.set
    if loss.dim != set_.dim:
        raise ValueError("loss and set dimensions disagree")
    if settings.z_init is None:
        z = np.zeros(loss.dim)
    else:
        z = np.asarray(settings.z_init, dtype=float)
        if z.shape != (loss.dim,):
            raise ValueError(
                f"z_init has shape {z.shape}, expected ({loss.dim},)"
            )
        z = z.copy()

    beta = settings.beta
    mu = settings.mu_init
    stages = []
    status = None
    state = None
    stop_gap = np.inf
    objective_feasible = np.inf
    objective_penalized = np.inf
    feasible_point = None

    for stage_index in range(settings.stage_budget()):
        state, trace, hit = solve_inner(
            loss, set_, settings, mu, z, trace_sink, stage_index
        )
        pen = PenalizedIndicator(set=set_, mu=mu, beta=beta)
        feasible_point = set_.project(state.x)
        objective_feasible = float(loss.value(feasible_point)) + 0.5 * beta * float(
            feasible_point @ feasible_point
        )
        objective_penalized = float(loss.value(state.x)) + pen.value(state.x)
        stop_gap = abs(objective_feasible - objective_penalized)
        stages.append(
            StageLog(
                mu=mu,
                iterations=state.n,
                final_gap=state.gap,
                stop_gap=stop_gap,
                residual_trace=trace if collect_traces else None,
            )
        )
        if not hit and settings.strict:
            status = SolveStatus.INNER_BUDGET_EXHAUSTED
            break
        if stop_gap <= settings.delta_stop:
            status = SolveStatus.CONVERGED
            break
        z = state.z
        mu = settings.rho * mu
        if mu < settings.mu_min:
            status = SolveStatus.MU_FLOOR_REACHED
            break
    if status is None:
        # stage budget exhausted before any trigger: the continuation ended
        status = SolveStatus.MU_FLOOR_REACHED

    return SolveResult(
        x=state.x,
        y=state.y,
        z=state.z,
        feasible_point=feasible_point,
        objective_feasible=objective_feasible,
        objective_penalized=objective_penalized,
        status=status,
        stages=tuple(stages),
    )


def multi_start_solve(problem, settings, num_starts, seed, Gamma, trace_sink=None):
    """Repeat :func:`solve` from random starts and keep the best feasible run.

    Start index 0 uses ``settings.z_init``; the rest draw every coordinate
    uniformly from ``[-Gamma, Gamma]`` with a generator seeded by ``seed``,
    so the whole sweep is reproducible.  Runs are ranked by feasible
    objective with ties broken by lowest start index, which makes the
    reduction independent of execution order.

    Returns
    -------
    best : SolveResult
    results : list of SolveResult
        One entry per start, in start order.
    """
    if num_starts < 1:
        raise ValueError("num_starts must be at least 1")
    if Gamma <= 0:
        raise ValueError("Gamma must be positive")
    dim = problem.loss.dim
    rng = np.random.default_rng(seed)
    starts = [settings.z_init]
    for _ in range(num_starts - 1):
        starts.append(rng.uniform(-Gamma, Gamma, size=dim))

    results = []
    for z0 in starts:
        results.append(solve(problem, replace(settings, z_init=z0), trace_sink))
    best_index = min(
        range(num_starts), key=lambda i: (results[i].objective_feasible, i)
    )
    return results[best_index], results


def estimate_tail_rate(trace):
    """Geometric decay factor fitted to the tail of a positive trace.

    Least-squares fit of ``log r_n`` against ``n`` over the final 30 entries
    (or all of them when shorter); returns ``exp(slope)``, so an exact
    sequence ``r_n = c * rate^n`` recovers ``rate`` and a constant trace
    returns 1.0.  Values below 1 indicate linear convergence of the tail.
    """
    t = np.asarray(trace, dtype=float)
    if t.ndim != 1 or t.size < 10:
        raise ValueError("trace must hold at least 10 entries")
    if np.any(t <= 0):
        raise ValueError("trace entries must be positive")
    tail = t[-30:]
    n = np.arange(tail.size, dtype=float)
    slope = np.polyfit(n, np.log(tail), 1)[0]
    return float(np.exp(slope))
