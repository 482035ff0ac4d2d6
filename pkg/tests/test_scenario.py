import json

import pytest

from semnav.scenario import (
    MODE_CLASSIC,
    Scenario,
    ScenarioError,
    load_scenario,
    save_scenario,
    scenario_from_dict,
)

MINIMAL = {
    "name": "mini",
    "workspace": [-1.0, -2.0, 4.0, 2.0],
    "robot": {"start": [0.0, 0.0, 0.0], "goal": [2.0, 0.0, 0.0]},
    "objects": [
        {"id": 0, "center": [2.0, 1.0], "half_extents": [0.1, 0.5, 0.5], "class_id": 1, "stationarity": 1}
    ],
}


def test_minimal_file_fills_defaults(tmp_path):
    path = tmp_path / "mini.json"
    path.write_text(json.dumps(MINIMAL))
    sc = load_scenario(path)
    assert sc.cbf.theta_zero == 0.15
    assert sc.cbf.theta_cutoff == 1.8
    assert sc.cbf.bias == 0.75
    assert sc.cbf.lambda_c == 3.0
    assert sc.cbf.lambda_s == 2.0
    assert sc.controller.gamma_bar == 0.03
    assert sc.mode == "semantic_mpc_cbf"
    assert sc.consistency.removal_threshold == 0.4


def test_negative_event_time_rejected():
    bad = dict(MINIMAL, events=[{"time": -1.0, "object_id": 0, "action": "remove"}])
    with pytest.raises(ScenarioError, match=r"events\[0\].time"):
        scenario_from_dict(bad)


def test_unknown_keys_rejected_with_path():
    bad = dict(MINIMAL, extra_knob=1)
    with pytest.raises(ScenarioError, match="extra_knob"):
        scenario_from_dict(bad)
    bad2 = dict(MINIMAL, cbf={"theta_zro": 0.15})
    with pytest.raises(ScenarioError, match="theta_zro"):
        scenario_from_dict(bad2)


def test_round_trip_identity(tmp_path):
    sc = scenario_from_dict(dict(MINIMAL, mode=MODE_CLASSIC, seed=7,
                                 events=[{"time": 2.0, "object_id": 0, "action": "teleport", "center": [2.5, 1.0]}]))
    p1 = tmp_path / "a.json"
    save_scenario(sc, p1)
    sc2 = load_scenario(p1)
    assert sc2 == sc
    p2 = tmp_path / "b.json"
    save_scenario(sc2, p2)
    assert load_scenario(p2) == sc


def test_start_outside_workspace_rejected():
    bad = dict(MINIMAL, robot={"start": [-5.0, 0.0, 0.0], "goal": [2.0, 0.0, 0.0]})
    with pytest.raises(ScenarioError, match="start"):
        scenario_from_dict(bad)


def test_teleport_requires_center():
    bad = dict(MINIMAL, events=[{"time": 1.0, "object_id": 0, "action": "teleport"}])
    with pytest.raises(ScenarioError, match="center"):
        scenario_from_dict(bad)


def test_bad_mode_rejected():
    with pytest.raises(ScenarioError, match="mode"):
        scenario_from_dict(dict(MINIMAL, mode="warp_drive"))


def test_duplicate_object_ids_rejected():
    objs = [MINIMAL["objects"][0], dict(MINIMAL["objects"][0])]
    with pytest.raises(ScenarioError, match="duplicate"):
        scenario_from_dict(dict(MINIMAL, objects=objs))


def test_shipped_scenarios_load(scenario_dir):
    names = {p.name for p in scenario_dir.glob("*.json")}
    assert {"open_goal.json", "wall_sweep.json", "drawer_gap.json", "drawer_shift.json"} <= names
    for p in sorted(scenario_dir.glob("*.json")):
        sc = load_scenario(p)
        assert isinstance(sc, Scenario)


def test_shipped_scenarios_round_trip(scenario_dir, tmp_path):
    for p in sorted(scenario_dir.glob("*.json")):
        sc = load_scenario(p)
        out = tmp_path / p.name
        save_scenario(sc, out)
        assert load_scenario(out) == sc
