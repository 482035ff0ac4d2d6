import json

import pytest

from semnav.cli import main


def test_validate_ok(scenario_dir, capsys):
    rc = main(["validate", str(scenario_dir / "open_goal.json")])
    assert rc == 0
    assert "ok" in capsys.readouterr().out


def test_validate_rejects_bad_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"name": "x", "bogus": 1}))
    rc = main(["validate", str(bad)])
    assert rc == 2
    assert "bogus" in capsys.readouterr().err


def test_missing_file_exit_code(tmp_path):
    assert main(["validate", str(tmp_path / "nope.json")]) == 2


def test_run_writes_outputs(scenario_dir, tmp_path, capsys):
    rc = main(["run", str(scenario_dir / "open_goal.json"), "--out", str(tmp_path / "out"), "--export-tsdf"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "goal_reached=True" in out
    assert (tmp_path / "out" / "trajectory.csv").exists()
    assert (tmp_path / "out" / "run.svg").exists()


def test_run_mode_and_gamma_overrides(scenario_dir, tmp_path):
    rc = main([
        "run", str(scenario_dir / "open_goal.json"), "--out", str(tmp_path / "o2"),
        "--mode", "nonsemantic_mpc_cbf", "--gamma-bar", "0.5", "--seed", "9",
    ])
    assert rc == 0


def test_sweep(scenario_dir, tmp_path, capsys):
    rc = main([
        "sweep", str(scenario_dir / "open_goal.json"), "--out", str(tmp_path / "sw"),
        "--gamma-bar", "0.1,1.0",
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "gamma_bar=0.1" in out and "gamma_bar=1" in out
    assert (tmp_path / "sw" / "gamma_0.1" / "metrics.txt").exists()
    assert (tmp_path / "sw" / "gamma_1" / "metrics.txt").exists()


def test_sweep_rejects_bad_gamma_list(scenario_dir, tmp_path):
    assert main(["sweep", str(scenario_dir / "open_goal.json"), "--out", str(tmp_path), "--gamma-bar", "abc"]) == 2
