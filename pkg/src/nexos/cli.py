"""Command-line entry point: configuration, file I/O, experiments, verification."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np
import scipy.io

from .core import PenalizedIndicator, SolverSettings, SolveStatus
from .engine import multi_start_solve, solve, solve_inner, drs_step
from . import operators as ops
from . import oracle
from . import problems as prb

__all__ = (
    "RunConfig",
    "read_matrix",
    "read_vector",
    "write_matrix",
    "cmd_solve",
    "cmd_generate",
    "cmd_benchmark",
    "cmd_verify",
    "main",
)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    """Everything one solve run needs; serializes losslessly to JSON.

    ``data_files`` maps logical names to paths (``A``/``b`` for sparse
    regression, ``M``/``b`` plus ``rows``/``cols`` for rank minimization,
    ``Z`` for matrix completion, ``Sigma`` for factor analysis); ``m`` and
    ``seed`` select the synthetic generator instead.  ``settings`` holds
    scalar overrides of :class:`SolverSettings` fields.
    """

    family: str = "sr"
    k: int | None = None
    r: int | None = None
    Gamma: float | None = None
    m: int | None = None
    seed: int | None = None
    rows: int | None = None
    cols: int | None = None
    data_files: dict | None = None
    settings: dict | None = None
    num_starts: int = 1
    out_dir: str = "."
    trace: bool = False

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# matrix / vector file I/O (.mtx MatrixMarket, .csv headerless)
# ---------------------------------------------------------------------------


def read_matrix(path):
    """Load a dense matrix from a ``.mtx`` or headerless ``.csv`` file."""
    p = str(path)
    if not os.path.exists(p):
        raise FileNotFoundError(f"no such file: {p}")
    if p.endswith(".mtx"):
        M = scipy.io.mmread(p)
        M = M.toarray() if hasattr(M, "toarray") else np.asarray(M)
        return np.atleast_2d(np.asarray(M, dtype=float))
    if p.endswith(".csv"):
        return np.atleast_2d(np.loadtxt(p, delimiter=",", dtype=float, ndmin=2))
    raise ValueError(f"unsupported matrix format (use .mtx or .csv): {p}")


def read_vector(path):
    """Load a vector from a ``.mtx`` or headerless ``.csv`` file."""
    return read_matrix(path).ravel()


def write_matrix(path, M):
    """Write a dense matrix as ``.mtx`` or headerless ``.csv`` by extension."""
    p = str(path)
    M = np.asarray(M, dtype=float)
    if p.endswith(".mtx"):
        scipy.io.mmwrite(p, np.atleast_2d(M))
    elif p.endswith(".csv"):
        np.savetxt(p, np.atleast_1d(M), delimiter=",", fmt="%.17g")
    else:
        raise ValueError(f"unsupported matrix format (use .mtx or .csv): {p}")


# ---------------------------------------------------------------------------
# solve command
# ---------------------------------------------------------------------------


def _instance_from_config(config):
    """Build the problem instance a config describes; returns (instance, Gamma)."""
    fam = config.family.lower()
    files = config.data_files or {}
    if fam == "sr":
        if "A" in files and "b" in files:
            A = read_matrix(files["A"])
            b = read_vector(files["b"])
            m = A.shape[0]
        elif config.m is not None:
            if config.seed is None:
                raise ValueError("generating an instance needs both m and seed")
            A, b, _, _ = prb.generate_sr_instance(config.m, config.seed)
            m = config.m
        else:
            raise ValueError("sr needs data files A and b, or m and seed")
        k = config.k if config.k is not None else int(np.round(m / 5))
        Gamma = config.Gamma if config.Gamma is not None else 1.0
        return prb.build_sparse_regression(A, b, k, Gamma), Gamma
    if fam == "rm":
        if "M" in files and "b" in files:
            if config.rows is None or config.cols is None:
                raise ValueError("rm from files needs rows and cols")
            M = read_matrix(files["M"])
            b = read_vector(files["b"])
            A_mats = M.reshape(M.shape[0], config.cols, config.rows).transpose(
                0, 2, 1
            )
            m = config.rows
        elif config.m is not None:
            if config.seed is None:
                raise ValueError("generating an instance needs both m and seed")
            Gamma_gen = config.Gamma if config.Gamma is not None else np.inf
            A_mats, b, _ = prb.generate_rm_instance(config.m, config.seed, Gamma_gen)
            m = config.m
        else:
            raise ValueError("rm needs data files M and b, or m and seed")
        r = config.r if config.r is not None else max(int(np.round(m / 10)), 1)
        if config.Gamma is None:
            raise ValueError("rm needs an explicit Gamma")
        return prb.build_rank_minimization(A_mats, b, r, config.Gamma), config.Gamma
    if fam == "mc":
        if "Z" not in files:
            raise ValueError("mc needs a data file Z (missing entries as nan)")
        Z = read_matrix(files["Z"])
        rows, cols = np.nonzero(~np.isnan(Z))
        if config.r is None:
            raise ValueError("mc needs a rank bound r")
        inst = prb.build_matrix_completion(
            Z[rows, cols], (rows, cols), Z.shape, config.r, config.Gamma
        )
        return inst, inst.set.Gamma
    if fam == "fa":
        if "Sigma" not in files:
            raise ValueError("fa needs a data file Sigma")
        Sigma = read_matrix(files["Sigma"])
        if config.r is None or config.Gamma is None:
            raise ValueError("fa needs r and Gamma")
        return prb.build_factor_analysis(Sigma, config.r, config.Gamma), config.Gamma
    raise ValueError(f"unknown family: {config.family}")


def _settings_from_config(config):
    overrides = dict(config.settings or {})
    unknown = set(overrides) - {f.name for f in fields(SolverSettings)}
    if unknown:
        raise ValueError(f"unknown settings keys: {sorted(unknown)}")
    if "z_init" in overrides:
        raise ValueError("z_init cannot be set from a config file")
    return SolverSettings(**overrides)


def cmd_solve(config):
    """Run one configured solve; write result JSON plus optional trace CSV."""
    instance, Gamma = _instance_from_config(config)
    settings = _settings_from_config(config)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    trace_rows = []
    sink = None
    if config.trace:
        sink = lambda stage, mu, it, gap: trace_rows.append((stage, mu, it, gap))

    t0 = time.perf_counter()
    if config.num_starts > 1:
        seed = config.seed if config.seed is not None else 0
        result, _ = multi_start_solve(
            instance, settings, config.num_starts, seed, Gamma, trace_sink=sink
        )
    else:
        result = solve(instance, settings, trace_sink=sink)
    wall = time.perf_counter() - t0

    x_name = "x.csv"
    np.savetxt(out_dir / x_name, result.x, delimiter=",", fmt="%.17g")
    payload = {
        "status": result.status.value,
        "objective_feasible": result.objective_feasible,
        "objective_penalized": result.objective_penalized,
        "wall_time_s": wall,
        "stages": [
            {
                "mu": s.mu,
                "iterations": s.iterations,
                "final_gap": s.final_gap,
                "stop_gap": s.stop_gap,
            }
            for s in result.stages
        ],
        "x_path": x_name,
    }
    with open(out_dir / "result.json", "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")

    if config.trace:
        with open(out_dir / "trace.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["stage_index", "mu", "iter", "fixed_point_gap"])
            for row in trace_rows:
                w.writerow([row[0], repr(float(row[1])), row[2], repr(float(row[3]))])

    print(f"status: {result.status.value}")
    print(f"objective (feasible point): {result.objective_feasible:.12g}")
    print(f"result written to {out_dir / 'result.json'}")
    return 0 if result.status is SolveStatus.CONVERGED else 2


# ---------------------------------------------------------------------------
# generate command
# ---------------------------------------------------------------------------


def cmd_generate(family, m, seed, out_dir, Gamma=None):
    """Write a synthetic instance to disk as MatrixMarket / CSV files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fam = family.lower()
    if fam == "sr":
        A, b, x_true, sigma2 = prb.generate_sr_instance(m, seed)
        write_matrix(out / "A.mtx", A)
        write_matrix(out / "b.csv", b)
        write_matrix(out / "xtrue.csv", x_true)
        meta = {
            "family": "sr",
            "m": m,
            "d": A.shape[1],
            "k": int(np.round(m / 5)),
            "Gamma": 1.0,
            "seed": seed,
            "sigma2": sigma2,
        }
    elif fam == "rm":
        g = Gamma if Gamma is not None else np.inf
        A_mats, b, X_true = prb.generate_rm_instance(m, seed, g)
        M = A_mats.transpose(0, 2, 1).reshape(A_mats.shape[0], -1)
        write_matrix(out / "M.mtx", M)
        write_matrix(out / "b.csv", b)
        write_matrix(out / "xtrue.mtx", X_true)
        meta = {
            "family": "rm",
            "m": m,
            "d": X_true.shape[1],
            "r": max(int(np.round(m / 10)), 1),
            "n_measurements": int(A_mats.shape[0]),
            "Gamma": None if not np.isfinite(g) else g,
            "seed": seed,
        }
    else:
        raise ValueError(f"no generator for family: {family}")
    with open(out / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    print(f"instance written to {out}")
    return 0


# ---------------------------------------------------------------------------
# benchmark command
# ---------------------------------------------------------------------------


def _bench_sr_oracle(trial, seed):
    # identification-driven battery: signal cardinality matches the solve
    # bound and magnitudes stay away from zero
    A, b, _, _ = prb.generate_sr_instance(
        10, seed + trial, card=4, signal_range=(0.5, 1.0)
    )
    settings = SolverSettings(gamma=5e-2)
    instance = prb.build_sparse_regression(A, b, 4, 1.0)
    best, _ = multi_start_solve(instance, settings, 20, seed + trial, 1.0)
    report = oracle.sr_global_opt(A, b, 4, 1.0, beta=settings.beta)
    return {
        "trial": trial,
        "nexos_obj": best.objective_feasible,
        "oracle_obj": report.optimum,
        "ratio": best.objective_feasible / report.optimum,
    }


def _bench_sr_support(trial, seed):
    A, b, x_true, _ = prb.generate_sr_instance(50, seed + trial)
    k = int(np.round(50 / 5))
    instance = prb.build_sparse_regression(A, b, k, 1.0)
    result = solve(instance, SolverSettings())
    return {
        "trial": trial,
        "support_recovery": prb.metric_support_recovery(
            result.feasible_point, x_true
        ),
        "rms_error": prb.metric_rms(result.feasible_point, x_true),
    }


def _bench_rm_recovery(trial, seed):
    Gamma = 20.0
    A_mats, b, X_true = prb.generate_rm_instance(20, seed + trial, Gamma)
    instance = prb.build_rank_minimization(A_mats, b, 2, Gamma)
    result = solve(instance, SolverSettings())
    X_hat = result.feasible_point.reshape(X_true.shape, order="F")
    return {
        "trial": trial,
        "max_abs_error": float(np.max(np.abs(X_true - X_hat))),
    }


_BENCH_SUITES = {
    "sr-oracle": _bench_sr_oracle,
    "sr-support": _bench_sr_support,
    "rm-recovery": _bench_rm_recovery,
}


def cmd_benchmark(suite, trials, seed, out_dir="."):
    """Run a desk-scale benchmark suite and write per-trial and summary CSVs.

    Trials are independent and may run concurrently; ``NEXOS_THREADS`` caps
    the pool size.  Output rows are ordered by trial index regardless of
    completion order.
    """
    if suite not in _BENCH_SUITES:
        raise ValueError(f"unknown suite: {suite} (choose from {sorted(_BENCH_SUITES)})")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    fn = _BENCH_SUITES[suite]
    workers = max(1, int(os.environ.get("NEXOS_THREADS", "1")))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=min(workers, trials)) as pool:
            records = list(pool.map(lambda t: fn(t, seed), range(trials)))
    else:
        records = [fn(t, seed) for t in range(trials)]

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    columns = list(records[0].keys())
    path = out / f"{suite}.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for rec in records:
            w.writerow(
                [rec[c] if c == "trial" else repr(float(rec[c])) for c in columns]
            )

    metrics = [c for c in columns if c != "trial"]
    summary_path = out / f"{suite}_summary.csv"
    with open(summary_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "mean", "stderr"])
        for c in metrics:
            vals = np.array([rec[c] for rec in records], dtype=float)
            stderr = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
            w.writerow([c, repr(float(vals.mean())), repr(stderr)])
            print(f"{suite} {c}: mean={vals.mean():.6g} stderr={stderr:.3g}")
    print(f"per-trial CSV: {path}")
    print(f"summary CSV:   {summary_path}")
    return 0


# ---------------------------------------------------------------------------
# verify command
# ---------------------------------------------------------------------------


def _check_prox_identity(rng, n_samples=1000):
    worst = 0.0
    for _ in range(n_samples):
        x = rng.uniform(-3, 3, size=2)
        gamma = 10.0 ** rng.uniform(-3, 0)
        mu = 10.0 ** rng.uniform(-3, 1)
        beta = 0.0 if rng.random() < 0.5 else 10.0 ** rng.uniform(-8, 0)
        k = int(rng.integers(1, 3))
        Gamma = rng.uniform(0.5, 2.0)
        set_ = prb.SparseBoxSet(k, Gamma, 2)
        y = ops.prox_penalized_indicator(x, set_, gamma, mu, beta)
        pen = PenalizedIndicator(set=set_, mu=mu, beta=beta)
        val = pen.value(y) + float(np.sum((y - x) ** 2)) / (2 * gamma)
        _, ref = oracle.penalized_prox_reference(x, k, Gamma, gamma, mu, beta)
        worst = max(worst, val - ref)
    return worst <= 1e-6, f"worst objective excess {worst:.3e}"


def _check_mc_equivalence(rng):
    V = rng.standard_normal((5, 5))
    rows, cols = np.nonzero(rng.random((5, 5)) < 0.5)
    vals = rng.standard_normal(rows.size)
    gamma = 0.37
    direct = ops.prox_masked_least_squares(vals, rows, cols, gamma, V)
    sel = np.zeros((rows.size, 25))
    flat = cols * 5 + rows
    sel[np.arange(rows.size), flat] = 1.0
    dense = ops.prox_least_squares(sel, vals, gamma, V.ravel(order="F"))
    err = float(np.max(np.abs(direct.ravel(order="F") - dense)))
    return err <= 1e-10, f"max deviation {err:.3e}"


def _check_rm_equivalence(rng):
    A_mats = rng.standard_normal((5, 3, 4))
    b = rng.standard_normal(5)
    V = rng.standard_normal((3, 4))
    gamma = 0.21
    direct = ops.prox_affine_map_least_squares(A_mats, b, gamma, V)
    M = A_mats.transpose(0, 2, 1).reshape(5, -1)
    dense = ops.prox_least_squares(M, b, gamma, V.ravel(order="F"))
    err = float(np.max(np.abs(direct.ravel(order="F") - dense)))
    return err <= 1e-10, f"max deviation {err:.3e}"


def _l1_fun(nu=1.0, beta=0.0):
    return ops.SmoothedFunction(
        value_fn=lambda u: float(np.sum(np.abs(u))),
        prox_fn=lambda u, t: np.sign(u) * np.maximum(np.abs(u) - t, 0.0),
        nu=nu,
        beta_inner=beta,
    )


def _check_smoothed_gradient(rng):
    fun = _l1_fun(nu=0.7)
    worst = 0.0
    for _ in range(100):
        x = rng.uniform(-2, 2, size=5)
        g = ops.smoothed_gradient(fun, x)
        num = np.empty_like(x)
        h = 1e-6
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = h
            num[i] = (ops.smoothed_value(fun, x + e) - ops.smoothed_value(fun, x - e)) / (
                2 * h
            )
        rel = np.linalg.norm(g - num) / max(1.0, np.linalg.norm(num))
        worst = max(worst, rel)
    ok = worst <= 1e-5
    huber = ops.smoothed_prox(_l1_fun(nu=1.0), 1.0, np.array([3.0]))[0]
    ok = ok and abs(huber - 2.0) <= 1e-9
    return ok, f"worst fd error {worst:.3e}, huber point {huber!r}"


def _check_sparse_box(rng):
    for _ in range(200):
        d = int(rng.integers(2, 8))
        k = int(rng.integers(1, d + 1))
        Gamma = rng.uniform(0.5, 3.0)
        x = rng.standard_normal(d) * 2
        p = ops.project_sparse_box(x, k, Gamma)
        if np.count_nonzero(p) > k or np.max(np.abs(p)) > Gamma + 1e-12:
            return False, "projection left the set"
        if np.linalg.norm(ops.project_sparse_box(p, k, Gamma) - p) > 1e-12:
            return False, "projection is not idempotent"
    return True, "200 random projections feasible and idempotent"


def _check_rank_projection(rng):
    X = rng.standard_normal((3, 3)) * 2
    p = ops.project_rank_spectral(X, 1, 1.5)
    cand = oracle.rank_projection_oracle(X, 1, 1.5, samples=20000, seed=3)
    gap = np.linalg.norm(X - cand) - np.linalg.norm(X - p)
    return gap >= -1e-6, f"oracle candidate margin {gap:.3e}"


def _check_two_point_example():
    loss = prb.LeastSquaresLoss(np.array([[1.0]]), np.array([3.0]))
    set_ = prb.FinitePointSet([[0.0], [4.0]])
    consts = ops.DrsConstants.from_parameters(1.0, 1.0, 1.0)
    state = drs_step(loss, set_, consts, 1.0, 1.0, 1.0, np.array([1.0]))
    ok = (
        abs(state.x[0] - 7 / 3) < 1e-12
        and abs(state.y[0] - 11 / 9) < 1e-12
        and abs(state.z[0] + 1 / 9) < 1e-12
    )
    return ok, f"x={state.x[0]:.6f} y={state.y[0]:.6f} z={state.z[0]:.6f}"


def _check_schedule_and_warm_start():
    A, b, _, _ = prb.generate_sr_instance(8, 11)
    instance = prb.build_sparse_regression(A, b, 3, 1.0)
    settings = SolverSettings()
    result = solve(instance, settings)
    for i, stage in enumerate(result.stages):
        if stage.mu != settings.mu_init * settings.rho**i:
            return False, f"stage {i} has mu {stage.mu}"
    # replay the stage chain manually and compare bit for bit
    z = np.zeros(instance.loss.dim)
    mu = settings.mu_init
    for stage in result.stages:
        state, _, _ = solve_inner(instance.loss, instance.set, settings, mu, z)
        if state.n != stage.iterations or state.gap != stage.final_gap:
            return False, "stage replay diverged"
        z = state.z
        mu = settings.rho * mu
    if not np.array_equal(state.z, result.z):
        return False, "warm-start chain broke bitwise equality"
    return True, f"{len(result.stages)} stages replayed bitwise"


def _check_ridge_limit():
    rng = np.random.default_rng(5)
    A = rng.standard_normal((6, 4))
    b = rng.standard_normal(6)
    instance = prb.build_sparse_regression(A, b, 4, 1e6)
    settings = SolverSettings(
        eps_fixed_point=1e-11, delta_stop=1e-12, gamma=0.05, max_inner_iters=50000
    )
    result = solve(instance, settings)
    ridge = np.linalg.solve(
        2 * A.T @ A + settings.beta * np.eye(4), 2 * A.T @ b
    )
    err = float(np.max(np.abs(result.x - ridge)))
    return err <= 1e-6, f"ridge deviation {err:.3e}"


_VERIFY_SUITES = {
    "prox-suite": (
        ("penalized-prox-identity", lambda rng: _check_prox_identity(rng)),
        ("mc-prox-vs-dense", lambda rng: _check_mc_equivalence(rng)),
        ("rm-prox-vs-vectorized", lambda rng: _check_rm_equivalence(rng)),
        ("smoothed-gradient-fd", lambda rng: _check_smoothed_gradient(rng)),
    ),
    "projection-suite": (
        ("sparse-box-projection", lambda rng: _check_sparse_box(rng)),
        ("rank-projection-vs-search", lambda rng: _check_rank_projection(rng)),
    ),
    "engine-suite": (
        ("two-point-step", lambda rng: _check_two_point_example()),
        ("schedule-and-warm-start", lambda rng: _check_schedule_and_warm_start()),
        ("ridge-limit", lambda rng: _check_ridge_limit()),
    ),
}


def cmd_verify(suite):
    """Run oracle-equivalence and property checks; exit 0 when all pass."""
    if suite == "all":
        checks = [c for group in _VERIFY_SUITES.values() for c in group]
    elif suite in _VERIFY_SUITES:
        checks = list(_VERIFY_SUITES[suite])
    else:
        raise ValueError(
            f"unknown suite: {suite} (choose from {sorted(_VERIFY_SUITES)} or 'all')"
        )
    rng = np.random.default_rng(2024)
    failures = 0
    for name, fn in checks:
        ok, detail = fn(rng)
        print(f"{'ok  ' if ok else 'FAIL'} {name}: {detail}")
        failures += 0 if ok else 1
    print(f"{len(checks) - failures}/{len(checks)} checks passed, {failures} failures")
    return 0 if failures == 0 else 1


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="nexos",
        description="Exterior-point solver for convex losses over sparse / "
        "low-rank and other prox-regular sets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve a configured problem instance")
    ps.add_argument("--config", help="JSON config file (flags override its values)")
    ps.add_argument("--family", choices=["sr", "rm", "mc", "fa"])
    ps.add_argument("--k", type=int)
    ps.add_argument("--r", type=int)
    ps.add_argument("--Gamma", type=float)
    ps.add_argument("--m", type=int)
    ps.add_argument("--seed", type=int)
    ps.add_argument("--rows", type=int)
    ps.add_argument("--cols", type=int)
    ps.add_argument("--data", action="append", metavar="NAME=PATH", default=None,
                    help="data file, e.g. --data A=A.mtx --data b=b.csv")
    ps.add_argument("--set", dest="overrides", action="append",
                    metavar="FIELD=VALUE", default=None,
                    help="solver setting override, e.g. --set gamma=1e-3")
    ps.add_argument("--num-starts", type=int, dest="num_starts")
    ps.add_argument("--out-dir", dest="out_dir")
    ps.add_argument("--trace", action="store_true", default=None)

    pg = sub.add_parser("generate", help="write a synthetic instance to disk")
    pg.add_argument("--family", required=True, choices=["sr", "rm"])
    pg.add_argument("--m", type=int, required=True)
    pg.add_argument("--seed", type=int, required=True)
    pg.add_argument("--Gamma", type=float, default=None)
    pg.add_argument("--out-dir", dest="out_dir", default=".")

    pb = sub.add_parser("benchmark", help="run a desk-scale benchmark suite")
    pb.add_argument("--suite", required=True, choices=sorted(_BENCH_SUITES))
    pb.add_argument("--trials", type=int, default=50)
    pb.add_argument("--seed", type=int, default=0)
    pb.add_argument("--out-dir", dest="out_dir", default=".")

    pv = sub.add_parser("verify", help="run property and oracle checks")
    pv.add_argument(
        "--suite", default="all", choices=sorted(_VERIFY_SUITES) + ["all"]
    )
    return parser


def _parse_kv(pairs, what):
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ValueError(f"malformed {what} entry (expected NAME=VALUE): {item}")
        key, value = item.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _coerce_setting(key, value):
    int_fields = {"max_inner_iters", "max_outer_stages"}
    bool_fields = {"strict"}
    if key in bool_fields:
        return value.lower() in ("1", "true", "yes")
    if key in int_fields:
        return int(value)
    return float(value)


def _config_from_args(args):
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    for name in ("family", "k", "r", "Gamma", "m", "seed", "rows", "cols",
                 "num_starts", "out_dir", "trace"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(config, name, value)
    data = _parse_kv(args.data, "--data")
    if data:
        config.data_files = {**(config.data_files or {}), **data}
    overrides = {
        k: _coerce_setting(k, v)
        for k, v in _parse_kv(args.overrides, "--set").items()
    }
    if overrides:
        config.settings = {**(config.settings or {}), **overrides}
    return config


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return cmd_solve(_config_from_args(args))
        if args.command == "generate":
            return cmd_generate(args.family, args.m, args.seed, args.out_dir,
                                Gamma=args.Gamma)
        if args.command == "benchmark":
            return cmd_benchmark(args.suite, args.trials, args.seed, args.out_dir)
        if args.command == "verify":
            return cmd_verify(args.suite)
        raise ValueError(f"unknown command: {args.command}")
    except Exception as exc:  # noqa: BLE001 - single CLI error funnel
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
