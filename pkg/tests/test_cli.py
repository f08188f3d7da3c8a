"""Command-line interface: config round-trip, file formats, subcommands."""

import csv
import json

import numpy as np
import pytest

from nexos.cli import (
    RunConfig,
    cmd_benchmark,
    cmd_generate,
    cmd_solve,
    cmd_verify,
    main,
    read_matrix,
    read_vector,
    write_matrix,
)


def test_run_config_round_trip_identity():
    cfg = RunConfig(
        family="sr",
        k=4,
        Gamma=1.0,
        m=10,
        seed=3,
        data_files={"A": "A.mtx", "b": "b.csv"},
        settings={"gamma": 0.01, "max_inner_iters": 500},
        num_starts=5,
        out_dir="out",
        trace=True,
    )
    assert RunConfig.from_dict(cfg.to_dict()) == cfg
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_run_config_rejects_unknown_keys():
    with pytest.raises(ValueError):
        RunConfig.from_dict({"family": "sr", "bogus": 1})


def test_matrix_io_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    M = rng.standard_normal((4, 3))
    write_matrix(tmp_path / "m.mtx", M)
    write_matrix(tmp_path / "m.csv", M)
    assert np.allclose(read_matrix(tmp_path / "m.mtx"), M, atol=1e-12)
    assert np.allclose(read_matrix(tmp_path / "m.csv"), M, atol=1e-12)
    v = rng.standard_normal(5)
    write_matrix(tmp_path / "v.csv", v)
    assert np.allclose(read_vector(tmp_path / "v.csv"), v, atol=1e-12)
    with pytest.raises(FileNotFoundError):
        read_matrix(tmp_path / "missing.csv")
    with pytest.raises(ValueError):
        read_matrix(__file__)  # unsupported extension


def test_cmd_generate_writes_instance_files(tmp_path):
    assert cmd_generate("sr", 10, 1, tmp_path) == 0
    for name in ("A.mtx", "b.csv", "xtrue.csv", "meta.json"):
        assert (tmp_path / name).exists()
    A = read_matrix(tmp_path / "A.mtx")
    assert A.shape == (10, 20)
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["family"] == "sr" and meta["m"] == 10 and meta["d"] == 20


def test_cmd_solve_end_to_end(tmp_path):
    cfg = RunConfig(family="sr", m=10, seed=1, k=4, Gamma=1.0,
                    out_dir=str(tmp_path), trace=True)
    code = cmd_solve(cfg)
    assert code == 0
    payload = json.loads((tmp_path / "result.json").read_text())
    assert set(payload) == {
        "status",
        "objective_feasible",
        "objective_penalized",
        "wall_time_s",
        "stages",
        "x_path",
    }
    assert payload["status"] == "Converged"
    assert set(payload["stages"][0]) == {"mu", "iterations", "final_gap", "stop_gap"}
    x = read_vector(tmp_path / payload["x_path"])
    assert x.shape == (20,)
    with open(tmp_path / "trace.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["stage_index", "mu", "iter", "fixed_point_gap"]
    assert len(rows) - 1 == sum(s["iterations"] for s in payload["stages"])


def test_cmd_solve_reproducible_objectives(tmp_path):
    cfg1 = RunConfig(family="sr", m=8, seed=5, k=3, Gamma=1.0,
                     num_starts=3, out_dir=str(tmp_path / "a"))
    cfg2 = RunConfig(family="sr", m=8, seed=5, k=3, Gamma=1.0,
                     num_starts=3, out_dir=str(tmp_path / "b"))
    assert cmd_solve(cfg1) == cmd_solve(cfg2)
    p1 = json.loads((tmp_path / "a" / "result.json").read_text())
    p2 = json.loads((tmp_path / "b" / "result.json").read_text())
    assert p1["objective_feasible"] == p2["objective_feasible"]
    assert p1["objective_penalized"] == p2["objective_penalized"]


def test_cmd_solve_from_files(tmp_path):
    cmd_generate("sr", 10, 2, tmp_path / "data")
    cfg = RunConfig(
        family="sr",
        k=4,
        Gamma=1.0,
        data_files={"A": str(tmp_path / "data" / "A.mtx"),
                    "b": str(tmp_path / "data" / "b.csv")},
        out_dir=str(tmp_path / "run"),
    )
    assert cmd_solve(cfg) in (0, 2)
    assert (tmp_path / "run" / "result.json").exists()


def test_cmd_solve_missing_file_exits_one(tmp_path, capsys):
    code = main([
        "solve", "--family", "sr", "--k", "2", "--Gamma", "1.0",
        "--data", f"A={tmp_path}/nope.mtx", "--data", f"b={tmp_path}/nope.csv",
        "--out-dir", str(tmp_path),
    ])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_cmd_solve_mc_family(tmp_path):
    rng = np.random.default_rng(0)
    U = rng.standard_normal((5, 1))
    V = rng.standard_normal((6, 1))
    Z = U @ V.T
    Z[rng.random(Z.shape) > 0.8] = np.nan
    np.savetxt(tmp_path / "Z.csv", Z, delimiter=",")
    cfg = RunConfig(family="mc", r=1, data_files={"Z": str(tmp_path / "Z.csv")},
                    out_dir=str(tmp_path / "run"),
                    settings={"gamma": 0.5})
    assert cmd_solve(cfg) in (0, 2)


def test_cli_flag_overrides_config(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"family": "sr", "m": 8, "seed": 1, "k": 3,
                                    "Gamma": 1.0, "out_dir": str(tmp_path / "x")}))
    code = main(["solve", "--config", str(cfg_path),
                 "--out-dir", str(tmp_path / "flag-wins")])
    assert code in (0, 2)
    assert (tmp_path / "flag-wins" / "result.json").exists()
    assert not (tmp_path / "x").exists()


def test_cmd_benchmark_sr_oracle(tmp_path):
    assert cmd_benchmark("sr-oracle", 3, 11, tmp_path) == 0
    with open(tmp_path / "sr-oracle.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["trial", "nexos_obj", "oracle_obj", "ratio"]
    assert len(rows) - 1 == 3
    assert [r[0] for r in rows[1:]] == ["0", "1", "2"]
    with open(tmp_path / "sr-oracle_summary.csv") as fh:
        srows = list(csv.reader(fh))
    assert srows[0] == ["metric", "mean", "stderr"]
    assert {r[0] for r in srows[1:]} == {"nexos_obj", "oracle_obj", "ratio"}


def test_cmd_benchmark_respects_thread_env(tmp_path, monkeypatch):
    monkeypatch.setenv("NEXOS_THREADS", "2")
    assert cmd_benchmark("sr-oracle", 2, 3, tmp_path) == 0
    with open(tmp_path / "sr-oracle.csv") as fh:
        rows = list(csv.reader(fh))
    assert [r[0] for r in rows[1:]] == ["0", "1"]


def test_cmd_benchmark_unknown_suite(tmp_path):
    with pytest.raises(ValueError):
        cmd_benchmark("nope", 1, 0, tmp_path)


def test_cmd_verify_prox_suite_passes():
    assert cmd_verify("prox-suite") == 0


def test_cmd_verify_all_passes():
    assert cmd_verify("all") == 0


def test_main_generate_and_verify(tmp_path):
    assert main(["generate", "--family", "sr", "--m", "10", "--seed", "1",
                 "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "A.mtx").exists()
    assert main(["verify", "--suite", "projection-suite"]) == 0


def test_cmd_solve_fa_family(tmp_path):
    rng = np.random.default_rng(1)
    L = rng.standard_normal((4, 1))
    Sigma = L @ L.T + np.diag(rng.uniform(0.3, 0.8, 4))
    np.savetxt(tmp_path / "Sigma.csv", Sigma, delimiter=",")
    cfg = RunConfig(
        family="fa",
        r=1,
        Gamma=20.0,
        data_files={"Sigma": str(tmp_path / "Sigma.csv")},
        out_dir=str(tmp_path / "run"),
        settings={"gamma": 0.05},
    )
    assert cmd_solve(cfg) in (0, 2)
    payload = json.loads((tmp_path / "run" / "result.json").read_text())
    assert np.isfinite(payload["objective_feasible"])


def test_cmd_solve_rm_from_generated_files(tmp_path):
    assert cmd_generate("rm", 10, 4, tmp_path / "data", Gamma=15.0) == 0
    meta = json.loads((tmp_path / "data" / "meta.json").read_text())
    cfg = RunConfig(
        family="rm",
        r=meta["r"],
        Gamma=15.0,
        rows=meta["m"],
        cols=meta["d"],
        data_files={"M": str(tmp_path / "data" / "M.mtx"),
                    "b": str(tmp_path / "data" / "b.csv")},
        out_dir=str(tmp_path / "run"),
    )
    assert cmd_solve(cfg) in (0, 2)


def test_cmd_benchmark_other_suites(tmp_path):
    assert cmd_benchmark("sr-support", 2, 1, tmp_path) == 0
    with open(tmp_path / "sr-support.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["trial", "support_recovery", "rms_error"]
    assert len(rows) - 1 == 2
    assert cmd_benchmark("rm-recovery", 1, 1, tmp_path) == 0
    with open(tmp_path / "rm-recovery.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["trial", "max_abs_error"]
    assert float(rows[1][1]) < 0.05
