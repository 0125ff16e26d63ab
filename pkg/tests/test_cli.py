import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from leastar.cli import main
from leastar.roadmap import Roadmap
from leastar.world import BoxObstacle, World, WorldBounds, sample_world, segment_in_collision

UNIT = WorldBounds.unit(2)


@pytest.fixture
def files(tmp_path):
    graph = tmp_path / "g.lrm"
    world = tmp_path / "w.json"
    assert main(["build-graph", "--n", "800", "--seed", "3", "--out", str(graph)]) == 0
    assert main(["gen-world", "--obstacles", "10", "--size-min", "0.05", "--size-max", "0.1",
                 "--seed", "5", "--out", str(world)]) == 0
    return tmp_path, graph, world


def plan_args(graph, world, *extra):
    return ["plan", "--graph", str(graph), "--world", str(world),
            "--start", "0.02,0.02", "--goal", "0.98,0.98", *extra]


def test_plan_solved(files, capsys):
    _, graph, world = files
    assert main(plan_args(graph, world, "--algo", "lea")) == 0
    out = capsys.readouterr()
    result = json.loads(out.out)
    assert result["status"] == "Solved" and result["algorithm"] == "lea"
    assert result["path"][0] == 800 and result["path"][-1] == 801
    assert result["seed"] == [5, 3]
    assert "edge_evals=" in out.err


def test_plan_no_solution(files, capsys):
    tmp, graph, _ = files
    wall = tmp / "wall.json"
    wall.write_text(World(UNIT, (BoxObstacle((0.45, 0.0), (0.55, 1.0)),), seed=1).to_json())
    assert main(plan_args(graph, wall, "--algo", "astar")) == 1
    assert json.loads(capsys.readouterr().out)["status"] == "NoSolution"


def test_misspelled_algorithm(files, capsys):
    _, graph, world = files
    assert main(plan_args(graph, world, "--algo", "lea-star")) == 2
    err = capsys.readouterr().err
    for name in ("astar", "lea", "lwa", "lazysp", "lra"):
        assert name in err


@pytest.mark.parametrize("argv", [
    [],
    ["plan"],
    ["fly"],
    ["build-graph", "--n", "10", "--seed", "1", "--out", "x", "--bogus"],
])
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2


def test_bad_inputs_exit_2(files, capsys):
    tmp, graph, world = files
    assert main(plan_args(tmp / "missing.lrm", world)) == 2
    assert main(["plan", "--graph", str(graph), "--world", str(world),
                 "--start", "0.5,0.5", "--goal", "1.5,0.5"]) == 2
    assert main(["plan", "--graph", str(graph), "--world", str(world),
                 "--start", "a,b", "--goal", "0.5,0.5"]) == 2
    assert main(plan_args(graph, world, "--epsilon", "0.5")) == 2


def test_gen_world_file_reproduces_collisions(files):
    _, _, world_path = files
    loaded = World.from_json(world_path.read_text())
    fresh = sample_world(UNIT, 10, (0.05, 0.1), 5)
    assert loaded == fresh
    rng = np.random.default_rng(0)
    for a, b in rng.uniform(0, 1, size=(500, 2, 2)):
        assert segment_in_collision(loaded, a, b) == segment_in_collision(fresh, a, b)


def test_build_graph_json_and_binary_agree(tmp_path):
    assert main(["build-graph", "--n", "300", "--seed", "9", "--out", str(tmp_path / "a.json")]) == 0
    assert main(["build-graph", "--n", "300", "--seed", "9", "--out", str(tmp_path / "a.bin")]) == 0
    a = Roadmap.load(tmp_path / "a.json")
    b = Roadmap.load(tmp_path / "a.bin")
    assert a.to_bytes() == b.to_bytes()


def minimal_config(tmp_path, **kw):
    cfg = dict(graph_sizes=[200], presets=[{"name": "m", "obstacles": 8}], envs=1, queries=1,
               epsilons=[1.0], algorithms=["lea", "lazysp"])
    cfg.update(kw)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def read_counts(path):
    with open(path) as fh:
        rows = list(csv.DictReader(fh))
    return [{k: v for k, v in r.items() if k != "time_ns"} for r in rows]


def test_bench_minimal_config(tmp_path, capsys):
    cfg = minimal_config(tmp_path)
    out = tmp_path / "run"
    assert main(["bench", "--config", str(cfg), "--out", str(out)]) == 0
    lines = (out / "records.csv").read_text().splitlines()
    assert len(lines) == 3
    assert lines[0].split(",")[:3] == ["algorithm", "epsilon", "N"]
    assert "Edge evaluations" in capsys.readouterr().out
    first = read_counts(out / "records.csv")
    assert main(["bench", "--config", str(cfg), "--out", str(out)]) == 0
    assert read_counts(out / "records.csv") == first
    report = json.loads((out / "report.json").read_text())
    assert len(report["records"]) == 2


def test_bench_seed_flag_changes_instances(tmp_path):
    cfg = minimal_config(tmp_path, queries=3)
    assert main(["bench", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert main(["bench", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path / "b")]) == 0
    assert read_counts(tmp_path / "a" / "records.csv") != read_counts(tmp_path / "b" / "records.csv")


@pytest.mark.parametrize("bad", [dict(algorithms=[]), dict(epsilons=[0.2]), dict(colour="red")])
def test_bench_bad_config_exit_2(tmp_path, bad):
    cfg = minimal_config(tmp_path, **bad)
    assert main(["bench", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_aggregate_command(tmp_path, capsys):
    cfg = minimal_config(tmp_path, queries=3, epsilons=[1.0, 2.0])
    assert main(["bench", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 0
    capsys.readouterr()
    report = str(tmp_path / "r" / "report.json")
    assert main(["aggregate", "--report", report, "--by", "algorithm"]) == 0
    rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
    assert [r["algorithm"] for r in rows] == ["lazysp", "lea"]
    assert all(r["n"] == "6" for r in rows)
    assert main(["aggregate", "--report", report, "--by", "nope"]) == 2
    out = tmp_path / "agg.csv"
    assert main(["aggregate", "--report", report, "--out", str(out)]) == 0
    assert out.read_text().startswith("algorithm,epsilon,N,obstacles,n,")


def test_module_entry_point(files):
    _, graph, world = files
    proc = subprocess.run([sys.executable, "-m", "leastar", *plan_args(graph, world, "--algo", "lra")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["status"] == "Solved"
