"""Exterior-point solver for convex losses over prox-regular nonconvex sets.

The solver minimizes ``f(x) + (beta/2)||x||^2`` over sets such as sparse
vectors with bounded entries or low-rank matrices with bounded spectral
norm.  It replaces the set indicator with a quadratic distance penalty,
solves each penalized problem with a Douglas-Rachford inner loop, and
drives the penalty parameter to zero across warm-started outer stages so
the iterates approach a local minimum from outside the feasible set.

Quick start::

    import nexos

    A, b, x_true, _ = nexos.generate_sr_instance(m=20, seed=0)
    instance = nexos.build_sparse_regression(A, b, k=4, Gamma=1.0)
    result = nexos.solve(instance, nexos.SolverSettings())
    print(result.status, result.objective_feasible)
"""

from .core import (
    NumericalError,
    PenalizedIndicator,
    ProjectableSet,
    SmoothLoss,
    SolveResult,
    SolveStatus,
    SolverSettings,
    StageLog,
    objective_original,
    objective_penalized,
    stationarity_residual,
)
from .engine import (
    IterationState,
    drs_step,
    estimate_tail_rate,
    multi_start_solve,
    solve,
    solve_inner,
)
from .operators import (
    DrsConstants,
    SmoothedFunction,
    project_fa_set,
    project_psd_cone,
    project_rank_spectral,
    project_sparse_box,
    project_spectrahedron_diag,
    prox_affine_map_least_squares,
    prox_fa_loss,
    prox_least_squares,
    prox_masked_least_squares,
    prox_penalized_indicator,
    smoothed_gradient,
    smoothed_prox,
    smoothed_value,
)
from .oracle import (
    OracleReport,
    penalized_prox_reference,
    prox_grid_oracle,
    rank_projection_oracle,
    sr_global_opt,
)
from .problems import (
    AffineMapLeastSquaresLoss,
    CustomSet,
    FactorAnalysisLoss,
    FactorAnalysisSet,
    Family,
    FinitePointSet,
    LeastSquaresLoss,
    MaskedLeastSquaresLoss,
    ProblemInstance,
    RankSpectralSet,
    SmoothedFunctionLoss,
    SparseBoxSet,
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
)

__version__ = "0.1.0"
