import json

import pytest

from swarm_perception.cli import SEED_ENV, main
from swarm_perception.topology import TopologyGraph

SMALL = """\
mode: static
n_robots: [5]
accuracies: [0.8]
heterogeneous: null
fill_ratios: [0.55]
topologies: [ring]
comm: [[10, 3]]
trials: 2
base_seed: 1
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text(SMALL)
    return p


def test_validate(cfg, capsys):
    assert main(["validate", "--config", str(cfg)]) == 0
    assert "2 runs" in capsys.readouterr().out


def test_validate_bad_config(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("accuracies: [0.4]\n")
    assert main(["validate", "--config", str(p)]) == 1
    assert "accuracies" in capsys.readouterr().err


def test_run_and_analyze(cfg, tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert (out / "manifest.json").exists()
    assert main(["analyze", "--in", str(out), "--out", str(tmp_path / "tables")]) == 0
    assert (tmp_path / "tables" / "consensus.tsv").exists()


def test_analyze_missing_dir(tmp_path):
    assert main(["analyze", "--in", str(tmp_path / "none")]) == 2


def test_run_without_output_dir(cfg):
    assert main(["run", "--config", str(cfg)]) == 1


def test_seed_env_override(cfg, tmp_path, monkeypatch):
    main(["run", "--config", str(cfg), "--out", str(tmp_path / "a")])
    monkeypatch.setenv(SEED_ENV, "99")
    main(["run", "--config", str(cfg), "--out", str(tmp_path / "b")])
    a = json.loads((tmp_path / "a" / "manifest.json").read_text())
    b = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert b["spec"]["base_seed"] == 99
    assert a["records"][0]["seed"] != b["records"][0]["seed"]


def test_bad_seed_env(cfg, monkeypatch):
    monkeypatch.setenv(SEED_ENV, "abc")
    assert main(["validate", "--config", str(cfg)]) == 1


def test_graph(tmp_path, capsys):
    assert main(["graph", "--topology", "ring", "--n", "5"]) == 0
    g = TopologyGraph.from_edge_list(capsys.readouterr().out)
    assert g.n_edges == 5
    out = tmp_path / "g.txt"
    assert main(["graph", "--n", "30", "--m", "2", "--seed", "4", "--out", str(out)]) == 0
    g = TopologyGraph.from_edge_list(out.read_text())
    assert g.n_nodes == 30 and g.is_connected()


def test_graph_bad_args():
    assert main(["graph", "--topology", "scale_free", "--n", "2", "--m", "5"]) == 1


def test_failed_trials_exit_2(cfg, tmp_path, monkeypatch):
    from swarm_perception import runner

    def broken(cfg):
        raise RuntimeError("nope")

    monkeypatch.setattr(runner, "run_static_trial", broken)
    assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
