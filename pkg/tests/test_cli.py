"""Command-line front end: subcommands, config parsing, exit codes."""

import subprocess
import sys

import numpy as np
import pytest

from pmknn.cli import main, parse_config
from pmknn.geometry import ConfidenceParams, Rect
from pmknn.rtree import build_index
from pmknn.server import QueryRequest, clappinq
from pmknn.simulation import (
    DataSpec,
    TrajectorySpec,
    gen_data,
    gen_trajectories,
    read_points_csv,
    read_results_csv,
    read_trajectories_csv,
    write_points_csv,
)


def test_no_command_is_usage_error(capsys):
    assert main([]) == 1
    assert "pmknn" in capsys.readouterr().err


def test_unknown_command_is_usage_error(capsys):
    assert main(["frobnicate"]) == 1
    assert "invalid choice" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# gen-data / gen-traj


def test_gen_data_writes_expected_csv(tmp_path, capsys):
    out = tmp_path / "pts.csv"
    assert main(["gen-data", "--out", str(out), "--n", "50", "--seed", "3"]) == 0
    assert "wrote 50 points" in capsys.readouterr().out
    ids, coords = read_points_csv(out)
    eids, ecoords = gen_data(DataSpec(kind="uniform", n=50, seed=3))
    assert np.array_equal(ids, eids)
    assert np.array_equal(coords, ecoords)

    again = tmp_path / "pts2.csv"
    assert main(["gen-data", "--out", str(again), "--n", "50", "--seed", "3"]) == 0
    assert out.read_bytes() == again.read_bytes()


def test_gen_data_zipf_and_csv_kinds(tmp_path, capsys):
    out = tmp_path / "z.csv"
    assert main(["gen-data", "--out", str(out), "--kind", "zipf", "--n", "200",
                 "--seed", "1", "--zipf-exponent", "1.5"]) == 0
    _, coords = read_points_csv(out)
    assert np.array_equal(coords, gen_data(DataSpec(kind="zipf", n=200, seed=1,
                                                    zipf_exponent=1.5))[1])

    assert main(["gen-data", "--out", str(tmp_path / "x.csv"), "--kind", "csv"]) == 1
    assert "requires --path" in capsys.readouterr().err

    src = tmp_path / "src.csv"
    write_points_csv(src, [0, 1], np.array([[-1.0, 0.0], [1.0, 2.0]]))
    dst = tmp_path / "rescaled.csv"
    assert main(["gen-data", "--out", str(dst), "--kind", "csv",
                 "--path", str(src), "--rescale"]) == 0
    _, coords = read_points_csv(dst)
    assert np.array_equal(coords, np.array([[0.0, 0.0], [10_000.0, 10_000.0]]))


def test_gen_traj_writes_expected_csv(tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert main(["gen-traj", "--out", str(out), "--n", "2", "--length", "100",
                 "--seed", "4"]) == 0
    assert "wrote 2 trajectories" in capsys.readouterr().out
    trajs = read_trajectories_csv(out)
    expected = gen_trajectories(TrajectorySpec(count=2, total_length=100.0, seed=4))
    assert len(trajs) == 2
    assert all(np.array_equal(a, b) for a, b in zip(trajs, expected))


# ---------------------------------------------------------------------------
# query


@pytest.fixture()
def points_csv(tmp_path):
    rng = np.random.default_rng(8)
    coords = rng.uniform(0.0, 400.0, size=(300, 2))
    path = tmp_path / "data.csv"
    write_points_csv(path, np.arange(300), coords)
    return path, coords


def test_query_matches_direct_engine_call(points_csv, capsys):
    path, coords = points_csv
    assert main(["query", "--data", str(path), "--rect", "100,100,140,140",
                 "--cl", "0.75", "--k", "3", "--dump"]) == 0
    out = capsys.readouterr().out

    index = build_index(coords, ids=np.arange(300))
    resp = clappinq(index, QueryRequest(Rect(100, 100, 140, 140), ConfidenceParams(0.75, 3)))
    assert f"candidates: {len(resp)}" in out
    assert f"radius {resp.known_region.radius:.3f}" in out
    dumped = [int(line.split(",")[0]) for line in out.splitlines()
              if line and line[0].isdigit() and line.count(",") == 2]
    assert sorted(dumped) == sorted(int(i) for i in resp.ids)


def test_query_baseline_report(points_csv, capsys):
    path, _ = points_csv
    assert main(["query", "--data", str(path), "--rect", "50,50,90,90",
                 "--baseline", "grid=4"]) == 0
    out = capsys.readouterr().out
    assert "baseline candidates:" in out
    assert "baseline page reads:" in out

    assert main(["query", "--data", str(path), "--rect", "50,50,90,90",
                 "--baseline", "grid=x"]) == 1
    assert "grid=N" in capsys.readouterr().err


def test_query_usage_errors(points_csv, capsys):
    path, _ = points_csv
    assert main(["query", "--data", str(path), "--rect", "1,2,3"]) == 1
    assert "x0,y0,x1,y1" in capsys.readouterr().err
    assert main(["query", "--data", str(path), "--rect", "1,2,3,nope"]) == 1
    capsys.readouterr()
    assert main(["query", "--data", str(path), "--rect", "0,0,10,10", "--cl", "0"]) == 1
    capsys.readouterr()
    # a missing dataset is a runtime failure, not a usage error
    assert main(["query", "--data", "/nonexistent.csv", "--rect", "0,0,10,10"]) == 2
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# experiment


GOOD_CONFIG = """
# tiny but complete sweep
data.kind = uniform
data.n = 300
data.seed = 1
traj.count = 1
traj.length = 120
traj.seed = 2
area_pct = 0.002
cl = 1.0
cl_r = 0.75
k = 4
k_r = 2
delta = 5.0
attack = overlap
repeats = 1
seed = 7
mc_samples = 10000
"""


def test_parse_config_roundtrip(tmp_path):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(GOOD_CONFIG + "out = results.csv\n")
    config, misc = parse_config(cfg)
    assert config.data.n == 300
    assert config.traj.total_length == 120.0
    assert config.areas == (0.002,)
    assert config.cls == (1.0,) and config.k_rs == (2,)
    assert config.area_samples == 10_000
    assert misc == {"out": "results.csv"}


def test_parse_config_lists_every_problem(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\ncl = x\njust words\n")
    with pytest.raises(Exception) as info:
        parse_config(cfg)
    msg = str(info.value)
    assert "line 1: unknown key 'bogus'" in msg
    assert "line 2: bad value for cl" in msg
    assert "line 3: expected 'key = value'" in msg

    cfg.write_text(GOOD_CONFIG + "repeats = 0\n")
    assert main(["experiment", "--config", str(cfg), "--out", str(tmp_path / "r.csv")]) == 1
    assert "repeats must be >= 1" in capsys.readouterr().err


def test_experiment_end_to_end(tmp_path, capsys):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(GOOD_CONFIG)
    out = tmp_path / "results.csv"
    assert main(["experiment", "--config", str(cfg), "--out", str(out)]) == 0
    assert "wrote 1 records" in capsys.readouterr().out
    records = read_results_csv(out)
    assert len(records) == 1
    assert records[0].dataset == "uniform-300"
    assert records[0].attack == "overlap"
    assert records[0].frequency >= 1.0
    assert records[0].elapsed_s == 0.0  # timing stays out of the CSV by default

    rerun = tmp_path / "rerun.csv"
    assert main(["experiment", "--config", str(cfg), "--out", str(rerun)]) == 0
    capsys.readouterr()
    assert out.read_bytes() == rerun.read_bytes()


def test_experiment_overrides_and_missing_out(tmp_path, capsys):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(GOOD_CONFIG)
    assert main(["experiment", "--config", str(cfg)]) == 1
    assert "no output path" in capsys.readouterr().err

    out = tmp_path / "r.csv"
    assert main(["experiment", "--config", str(cfg), "--out", str(out),
                 "--repeats", "2", "--seed", "9"]) == 0
    capsys.readouterr()
    rec = read_results_csv(out)[0]
    assert rec.repeats == 2

    assert main(["experiment", "--config", str(tmp_path / "missing.cfg")]) == 1
    assert "cannot read config" in capsys.readouterr().err


def test_exit_codes_through_subprocess(tmp_path):
    out = tmp_path / "pts.csv"
    ok = subprocess.run(
        [sys.executable, "-m", "pmknn.cli", "gen-data", "--out", str(out), "--n", "10"],
        capture_output=True,
    )
    assert ok.returncode == 0 and out.exists()
    usage = subprocess.run(
        [sys.executable, "-m", "pmknn.cli", "query", "--data", str(out), "--rect", "bad"],
        capture_output=True,
    )
    assert usage.returncode == 1
    runtime = subprocess.run(
        [sys.executable, "-m", "pmknn.cli", "query", "--data", "/nope.csv",
         "--rect", "0,0,1,1"],
        capture_output=True,
    )
    assert runtime.returncode == 2
