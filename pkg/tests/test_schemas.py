import json

import pytest

from loopflow._utils.exception import ScenarioError
from loopflow.schemas import (
    MetricsLog,
    PlanDocument,
    PlannerParams,
    ReplanRecord,
    Scenario,
    parse_scenario,
)


def _doc(**sections):
    data = {"agents": {"starts": [[-2.0, 0.0, 1.0], [2.0, 0.0, 1.0]]}}
    data.update(sections)
    return json.dumps(data)


# ------------------------------------------------------------
# Test 1: defaults
# ------------------------------------------------------------
def test_defaults_are_filled_in():
    s = parse_scenario(_doc())
    assert s.workspace.bounds_min == [-3.0, -3.0, 0.0]
    assert s.planner.d_travel == 0.5
    assert s.planner.eps_dup == pytest.approx(0.125)
    assert s.controller.ctrl_hz == 100.0
    assert s.runtime.replan_hz == 10.0
    assert s.runtime.periodic is True
    assert s.reuse_delta == pytest.approx(0.25)
    assert s.agents.count == 2
    assert s.plane_z is None


def test_dump_round_trips():
    s = parse_scenario(_doc(workspace={"obstacles": [{"type": "box", "min": [0, 0, 0], "max": [1, 1, 1]}]}))
    again = parse_scenario(s.dump())
    assert again == s
    assert '"min"' in s.dump()


def test_planar_height_defaults_to_mid_bounds():
    s = parse_scenario(_doc(workspace={"planar": True}))
    assert s.plane_z == pytest.approx(1.0)


# ------------------------------------------------------------
# Test 2: diagnostics
# ------------------------------------------------------------
def test_close_starts_name_both_agents():
    text = json.dumps({"agents": {"starts": [[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.1, 0.0, 1.0]]}})
    with pytest.raises(ScenarioError) as info:
        parse_scenario(text)
    message = " ".join(d["message"] for d in info.value.diagnostics)
    assert "agents 0 and 2" in message


def test_unknown_keys_are_rejected():
    with pytest.raises(ScenarioError) as info:
        parse_scenario(_doc(planner={"d_travle": 0.5}))
    assert any("d_travle" in d["path"] for d in info.value.diagnostics)


def test_control_rate_must_outpace_replanning():
    with pytest.raises(ScenarioError):
        parse_scenario(_doc(controller={"ctrl_hz": 40.0}, runtime={"replan_hz": 10.0}))


def test_malformed_json_reports_position():
    with pytest.raises(ScenarioError) as info:
        parse_scenario('{"agents": ')
    assert info.value.diagnostics[0]["expected"] == "json"


@pytest.mark.parametrize(
    "sections",
    [
        {"agents": {"n": 2, "starts": [[0.0, 0.0, 1.0]]}},
        {"agents": {"starts": [[0.0, 0.0, 5.0]]}},
        {"workspace": {"bounds_min": [0, 0, 0], "bounds_max": [1, 0, 1]}},
        {"mission": {"mode": "target_following"}},
        {"planner": {"d_travel": 0.5, "eps_dup": 0.6}},
        {"roadmap": {"lattice_h": 0.5, "connect_radius": 0.4}},
        {"workspace": {"obstacles": [{"type": "sphere", "center": [0, 0, 1], "radius": 0.2, "schedule": [[1, 0, 0, 1], [0, 0, 0, 1]]}]}},
        {"workspace": {"obstacles": [{"type": "box", "min": [5, 5, 0], "max": [6, 6, 2]}]}},
        {
            "workspace": {
                "planar": True,
                "obstacles": [
                    {"type": "pole", "xy": [1, 1], "radius": 0.2, "z": [0, 2]},
                    {"type": "pole", "xy": [-1, 1], "radius": 0.2, "z": [0, 1.5]},
                ],
            }
        },
    ],
)
def test_invalid_sections_are_rejected(sections):
    data = {"agents": {"starts": [[0.0, 0.0, 1.0]]}}
    data.update(sections)
    with pytest.raises(ScenarioError):
        parse_scenario(json.dumps(data))


def test_agent_count_without_starts():
    s = Scenario.model_validate({"agents": {"n": 4}})
    assert s.agents.count == 4
    assert s.agents.starts is None


# ------------------------------------------------------------
# Test 3: output documents
# ------------------------------------------------------------
def test_deterministic_view_drops_wall_clock_fields():
    log = MetricsLog(
        seed=1,
        mode="oneshot",
        replans=[ReplanRecord(t=0.0, version=1, trigger="initial", planning_ms=12.5)],
        wall_s=3.2,
    )
    view = log.deterministic_view()
    assert "wall_s" not in view
    assert "planning_ms" not in view["replans"][0]
    assert "mean_planning_ms_hit" not in view["summary"]
    assert view["replans"][0]["trigger"] == "initial"


def test_plan_document_defaults():
    doc = PlanDocument.model_validate_json('{"steps": [[[0, 0, 1]]]}')
    assert doc.flowtime == 0
    assert doc.feasible is True


def test_planner_params_deterministic_flag():
    assert not PlannerParams().deterministic
    assert PlannerParams(node_budget=10).deterministic


def test_violations_serialize_to_plain_json():
    import numpy as np

    from loopflow._utils.serialization import to_serializable
    from loopflow.schemas import Violation, ViolationKind

    v = Violation(condition=ViolationKind.GOAL, step=3, agents=[0], margin=0.5)
    out = to_serializable([v, np.array([1.0, 2.0])])
    assert out[0]["condition"] == "goal"
    assert out[1] == [1.0, 2.0]
    assert json.loads(json.dumps(out)) == out
