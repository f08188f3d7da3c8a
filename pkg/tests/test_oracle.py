"""Brute-force reference solvers."""

import numpy as np
import pytest

from nexos import (
    penalized_prox_reference,
    prox_grid_oracle,
    rank_projection_oracle,
    sr_global_opt,
)
from nexos.operators import project_rank_spectral


def test_sr_global_opt_two_support_enumeration():
    rep = sr_global_opt(np.eye(2), [3.0, 1.0], 1, 10.0)
    assert rep.optimum == pytest.approx(1.0)
    assert np.allclose(rep.argmin, [3.0, 0.0])
    assert rep.candidates_examined == 3  # empty + two singletons


def test_sr_global_opt_clamped_support():
    rep = sr_global_opt(np.eye(2), [3.0, 1.0], 1, 2.0)
    assert rep.optimum == pytest.approx(2.0)
    assert np.allclose(rep.argmin, [2.0, 0.0])


def test_sr_global_opt_matches_ridge_when_unconstrained():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((8, 5))
    b = rng.standard_normal(8)
    beta = 0.3
    rep = sr_global_opt(A, b, 5, 1e9, beta=beta)
    ridge = np.linalg.solve(2 * A.T @ A + beta * np.eye(5), 2 * A.T @ b)
    assert np.max(np.abs(rep.argmin - ridge)) <= 1e-8
    r = A @ ridge - b
    assert rep.optimum == pytest.approx(float(r @ r) + 0.5 * beta * float(ridge @ ridge))


def test_sr_global_opt_argmin_feasible_and_consistent():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((6, 10))
    b = rng.standard_normal(6)
    rep = sr_global_opt(A, b, 3, 0.8, beta=1e-6)
    x = rep.argmin
    assert np.count_nonzero(x) <= 3
    assert np.max(np.abs(x)) <= 0.8 + 1e-12
    r = A @ x - b
    direct = float(r @ r) + 0.5 * 1e-6 * float(x @ x)
    assert abs(direct - rep.optimum) <= 1e-10


def test_sr_global_opt_guards():
    with pytest.raises(ValueError):
        sr_global_opt(np.zeros((2, 21)), np.zeros(2), 1, 1.0)
    with pytest.raises(ValueError):
        sr_global_opt(np.zeros((2, 5)), np.zeros(2), 7, 1.0)


def test_prox_grid_oracle_quadratic():
    pt, val = prox_grid_oracle(lambda p: (p[0] - 1.0) ** 2, (-2.0, 2.0))
    assert abs(pt[0] - 1.0) <= 0.02  # within grid spacing
    assert val <= 1e-6


def test_prox_grid_oracle_penalized_prox_objective():
    # matches the closed-form prox example on the 2-dim sparse box
    def objective(p):
        y = np.asarray(p)
        tail = min(abs(y[0]), abs(y[1]))
        d2 = tail * tail  # distance to {card <= 1} with large box
        return d2 / 2.0 + 0.5 * np.sum((y - np.array([4.0, 2.0])) ** 2)

    pt, val = prox_grid_oracle(objective, ((-6.0, 6.0), (-6.0, 6.0)))
    assert np.max(np.abs(pt - np.array([4.0, 1.0]))) <= 1e-3
    assert val == pytest.approx(1.0, abs=1e-6)


def test_prox_grid_oracle_tie_breaks_lexicographically():
    pt, _ = prox_grid_oracle(lambda p: (p[0] ** 2 - 1.0) ** 2, (-2.0, 2.0))
    assert pt[0] == pytest.approx(-1.0, abs=1e-6)


def test_prox_grid_oracle_guards():
    with pytest.raises(ValueError):
        prox_grid_oracle(lambda p: 0.0, ((-1, 1),) * 3)
    with pytest.raises(ValueError):
        prox_grid_oracle(lambda p: 0.0, (-1, 1), resolution=5000)


def test_rank_projection_oracle_analytic_wins():
    X = np.diag([3.0, 1.0])
    best = rank_projection_oracle(X, 1, 2.0, samples=100000)
    analytic = np.diag([2.0, 0.0])
    assert np.linalg.norm(X - best) >= np.linalg.norm(X - analytic) - 1e-6


def test_rank_projection_oracle_feasible_input():
    X = np.diag([1.0, 0.0])
    best = rank_projection_oracle(X, 1, 2.0, samples=2000)
    assert np.allclose(best, X, atol=1e-12)


def test_rank_projection_oracle_unbounded_matches_svd_truncation():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((3, 3))
    best = rank_projection_oracle(X, 1, np.inf, samples=5000)
    trunc = project_rank_spectral(X, 1, 1e300)
    assert np.allclose(best, trunc, atol=1e-12)


def test_rank_projection_oracle_guard():
    with pytest.raises(ValueError):
        rank_projection_oracle(np.zeros((4, 4)), 1, 1.0, samples=10)


def test_penalized_prox_reference_guards():
    with pytest.raises(ValueError):
        penalized_prox_reference(np.zeros(11), 1, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        penalized_prox_reference(np.zeros(3), 0, 1.0, 1.0, 1.0)
