"""Problem builders, synthetic generators, metrics."""

import numpy as np
import pytest

from nexos import (
    SolveStatus,
    SolverSettings,
    solve,
    sr_global_opt,
)
from nexos.problems import (
    Family,
    ProblemInstance,
    build_factor_analysis,
    build_matrix_completion,
    build_rank_minimization,
    build_sparse_regression,
    generate_rm_instance,
    generate_sr_instance,
    metric_explained_variance,
    metric_rms,
    metric_support_recovery,
    normal_samples,
    standardize_columns,
    FinitePointSet,
    LeastSquaresLoss,
    SparseBoxSet,
)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def test_build_sparse_regression_oracle_optimum():
    inst = build_sparse_regression(np.eye(2), [3.0, 1.0], 1, 10.0)
    assert inst.family is Family.SR
    rep = sr_global_opt(np.eye(2), [3.0, 1.0], 1, 10.0)
    assert rep.optimum == pytest.approx(1.0)
    assert np.allclose(rep.argmin, [3.0, 0.0])


def test_build_sparse_regression_ridge_limit():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((6, 4))
    b = rng.standard_normal(6)
    inst = build_sparse_regression(A, b, 4, 1e6)  # card bound vacuous
    settings = SolverSettings(
        eps_fixed_point=1e-11, delta_stop=1e-12, gamma=0.05, max_inner_iters=50000
    )
    result = solve(inst, settings)
    ridge = np.linalg.solve(2 * A.T @ A + settings.beta * np.eye(4), 2 * A.T @ b)
    assert np.max(np.abs(result.x - ridge)) <= 1e-6


def test_build_sparse_regression_validation():
    with pytest.raises(ValueError):
        build_sparse_regression(np.eye(2), [1.0, 2.0], 0, 1.0)
    with pytest.raises(ValueError):
        build_sparse_regression(np.eye(2), [1.0, 2.0], 3, 1.0)
    with pytest.raises(ValueError):
        build_sparse_regression(np.eye(2), [1.0], 1, 1.0)


def test_problem_instance_dimension_check():
    loss = LeastSquaresLoss(np.eye(2), np.zeros(2))
    with pytest.raises(ValueError):
        ProblemInstance(loss=loss, set=SparseBoxSet(1, 1.0, 3))
    ProblemInstance(loss=loss, set=FinitePointSet([[0.0, 0.0]]))


def test_matrix_completion_fully_observed_recovers():
    rng = np.random.default_rng(0)
    Z = rng.standard_normal((4, 5))
    rows, cols = np.nonzero(np.ones_like(Z, dtype=bool))
    inst = build_matrix_completion(Z[rows, cols], (rows, cols), Z.shape, 4, 1e6)
    assert inst.family is Family.MC
    settings = SolverSettings(gamma=0.5, eps_fixed_point=1e-9)
    result = solve(inst, settings)
    X = result.x.reshape(Z.shape, order="F")
    assert np.linalg.norm(X - Z) <= 1e-3


def test_matrix_completion_auto_gamma_bound():
    Z = np.array([[1.0, np.nan], [np.nan, -2.0]])
    rows, cols = np.nonzero(~np.isnan(Z))
    inst = build_matrix_completion(Z[rows, cols], (rows, cols), Z.shape, 1)
    # missing entries filled with max |observed| = 2: Y = [[1,2],[2,-2]]
    assert inst.set.Gamma == pytest.approx(np.sqrt(1 + 4 + 4 + 4))


def test_rank_minimization_no_measurements_returns_zero():
    inst = build_rank_minimization(np.zeros((0, 2, 3)), [], 1, 1.0, shape=(2, 3))
    assert inst.family is Family.RM
    result = solve(inst, SolverSettings(beta=1e-3))
    assert result.status is SolveStatus.CONVERGED
    assert np.allclose(result.feasible_point, 0.0)


def test_factor_analysis_one_dim_split():
    inst = build_factor_analysis(np.array([[2.0]]), 1, 5.0)
    assert inst.family is Family.FA
    settings = SolverSettings(gamma=0.1, eps_fixed_point=1e-9, max_inner_iters=5000)
    result = solve(inst, settings)
    X, d = inst.loss.split(result.feasible_point)
    assert inst.loss.value(result.feasible_point) <= 1e-6
    assert X[0, 0] + d[0] == pytest.approx(2.0, abs=1e-3)
    assert X[0, 0] >= -1e-9 and d[0] >= -1e-12


def test_factor_analysis_validation():
    with pytest.raises(ValueError):
        build_factor_analysis(np.array([[0.0, 1.0], [0.0, 0.0]]), 1, 1.0)
    with pytest.raises(ValueError):
        build_factor_analysis(np.array([[-1.0]]), 1, 1.0)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def test_generate_sr_shapes_and_cardinality():
    A, b, x_true, sigma2 = generate_sr_instance(50, 1)
    assert A.shape == (50, 100)
    assert b.shape == (50,)
    assert np.count_nonzero(x_true) <= 10
    assert np.max(np.abs(x_true)) <= 1.0
    assert sigma2 > 0


def test_generate_sr_deterministic():
    out1 = generate_sr_instance(12, 7)
    out2 = generate_sr_instance(12, 7)
    for a, c in zip(out1, out2):
        assert np.array_equal(a, c)


def test_generate_sr_snr_identity():
    A, b, x_true, sigma2 = generate_sr_instance(20, 3)
    signal = A @ x_true
    ratio = float(signal @ signal) / sigma2
    assert ratio == pytest.approx(400.0 * 20, rel=1e-9)


def test_generate_sr_validation():
    with pytest.raises(ValueError):
        generate_sr_instance(4, 0)


def test_generate_rm_shapes_rank_and_bound():
    A_mats, b, X_true = generate_rm_instance(50, 1, Gamma=np.inf, oversample=0.2)
    assert X_true.shape == (50, 100)
    s = np.linalg.svd(X_true, compute_uv=False)
    assert np.sum(s > 1e-10 * s[0]) <= 5
    assert A_mats.shape[1:] == (50, 100)
    assert b.shape == (A_mats.shape[0],)
    # spectral truncation honors Gamma
    _, _, X_small = generate_rm_instance(10, 1, Gamma=3.0, oversample=0.2)
    assert np.linalg.svd(X_small, compute_uv=False)[0] <= 3.0 + 1e-12


def test_generate_rm_deterministic_and_untruncated():
    out1 = generate_rm_instance(10, 5, oversample=0.3)
    out2 = generate_rm_instance(10, 5, oversample=0.3)
    for a, c in zip(out1, out2):
        assert np.array_equal(a, c)
    # Gamma large enough never zeroes a kept singular value
    _, _, X_inf = generate_rm_instance(10, 5, Gamma=np.inf, oversample=0.3)
    _, _, X_big = generate_rm_instance(10, 5, Gamma=1e9, oversample=0.3)
    assert np.array_equal(X_inf, X_big)
    _, _, X_tiny = generate_rm_instance(10, 5, Gamma=1e-6, oversample=0.3)
    assert not np.array_equal(X_inf, X_tiny)


def test_generate_rm_validation():
    with pytest.raises(ValueError):
        generate_rm_instance(5, 0)


def test_normal_samples_moments():
    rng = np.random.default_rng(0)
    z = normal_samples(rng, 200000)
    assert abs(float(np.mean(z))) < 0.01
    assert abs(float(np.std(z)) - 1.0) < 0.01
    assert abs(float(np.mean(z**3))) < 0.03


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def test_support_recovery_examples():
    assert metric_support_recovery([1.0, -2.0], [1.0, -2.0]) == 100.0
    assert metric_support_recovery([-1.0, 1.0], [1.0, -1.0]) == 0.0
    assert metric_support_recovery([1.0, 0.0, 0.0, 0.0], [1.0, 0.0, -2.0, 0.0]) == 75.0


def test_support_recovery_bounds():
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = rng.choice([-1.0, 0.0, 1.0], size=8)
        y = rng.choice([-1.0, 0.0, 1.0], size=8)
        val = metric_support_recovery(x, y)
        assert 0.0 <= val <= 100.0
        assert (val == 100.0) == bool(np.all(np.sign(x) == np.sign(y)))


def test_metric_rms():
    assert metric_rms([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert metric_rms([1.0, -1.0], [0.0, 0.0]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        metric_rms([1.0], [1.0, 2.0])


def test_explained_variance_examples():
    X = np.diag([2.0, 1.0])
    Sigma = np.diag([3.0, 2.0])
    D = np.eye(2)
    assert metric_explained_variance(X, D, Sigma, 1) == pytest.approx(2.0 / 3.0)
    assert metric_explained_variance(X, D, Sigma, 2) == pytest.approx(1.0)
    assert metric_explained_variance(X, np.array([1.0, 1.0]), Sigma, 2) == (
        pytest.approx(1.0)
    )


def test_explained_variance_monotone_in_rank():
    rng = np.random.default_rng(1)
    B = rng.standard_normal((4, 4))
    Sigma = B @ B.T + 4 * np.eye(4)
    X = B @ B.T
    D = np.diag(rng.uniform(0.1, 0.5, 4))
    vals = [metric_explained_variance(X, D, Sigma, r) for r in range(1, 5)]
    assert all(v2 >= v1 - 1e-12 for v1, v2 in zip(vals, vals[1:]))


def test_explained_variance_zero_denominator():
    with pytest.raises(ValueError):
        metric_explained_variance(np.eye(2), np.eye(2), np.eye(2), 1)


def test_standardize_columns_ignores_missing():
    X = np.array([[1.0, 10.0], [3.0, np.nan], [5.0, 30.0]])
    Xs, mean, std = standardize_columns(X)
    assert mean[0] == pytest.approx(3.0)
    assert mean[1] == pytest.approx(20.0)
    col0 = Xs[:, 0]
    assert np.nanmean(col0) == pytest.approx(0.0)
    assert np.nanstd(col0) == pytest.approx(1.0)
    assert np.isnan(Xs[1, 1])
