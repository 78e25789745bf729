import numpy as np
import pytest

from loopflow.planner import Plan, ProblemQuery, SearchBudget, check_plan, refine, smooth_path, solve
from loopflow.schemas import PlannerParams
from loopflow.workspace import PoleObstacle, Workspace

from conftest import HI, LO


def _plan(points, target, d_travel=0.5):
    steps = np.array([[[x, y, 1.0]] for x, y in points])
    query = ProblemQuery(
        starts=steps[0],
        targets=[[target[0], target[1], 1.0]],
        r_agent=0.2,
        r_target=0.1,
        d_travel=d_travel,
    )
    return Plan(steps, query, feasible=True), query


def _arc_length(path):
    return float(np.linalg.norm(np.diff(path, axis=0), axis=1).sum())


# ------------------------------------------------------------
# Test 1: path smoothing
# ------------------------------------------------------------
def test_smoothing_keeps_a_straight_path(empty_ws, rng):
    plan, query = _plan([(0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (1.5, 0.0)], (1.5, 0.0))
    out = smooth_path(plan, 0, empty_ws, query, rng, p_skip=0.0)
    np.testing.assert_allclose(out.steps, plan.steps, atol=1e-9)


def test_smoothing_cuts_a_corner(empty_ws, rng):
    plan, query = _plan([(0.0, 0.0), (0.5, 0.0), (1.0, 0.0), (1.0, 0.5), (1.0, 1.0)], (1.0, 1.0))
    out = smooth_path(plan, 0, empty_ws, query, rng, p_skip=1.0)
    assert out is not plan
    assert _arc_length(out.path(0)) < _arc_length(plan.path(0))
    assert _arc_length(out.path(0)) == pytest.approx(np.sqrt(2.0))
    assert out.flowtime == plan.flowtime
    assert check_plan(out, query, empty_ws) == []


def test_smoothing_rejects_shortcut_through_pole(rng):
    ws = Workspace(LO, HI, [PoleObstacle([0.0, 0.0], 0.3, (0.0, 2.0))])
    detour = [(-1.0, 0.0), (-0.8, 0.45), (-0.3, 0.7), (0.3, 0.7), (0.8, 0.45), (1.0, 0.0)]
    plan, query = _plan(detour, (1.0, 0.0))
    out = smooth_path(plan, 0, ws, query, rng, p_skip=1.0)
    assert out is plan


def test_smoothing_respects_other_agents(empty_ws, rng):
    steps = np.array(
        [
            [[0.0, 0.0, 1.0], [0.5, 0.5, 1.0]],
            [[0.5, 0.0, 1.0], [0.5, 0.5, 1.0]],
            [[1.0, 0.0, 1.0], [0.5, 0.5, 1.0]],
            [[1.0, 0.5, 1.0], [0.5, 0.5, 1.0]],
            [[1.0, 1.0, 1.0], [0.5, 0.5, 1.0]],
        ]
    )
    query = ProblemQuery(
        starts=steps[0],
        targets=steps[-1],
        r_agent=0.2,
        r_target=0.1,
        d_travel=0.5,
    )
    plan = Plan(steps, query, feasible=True)
    # The diagonal shortcut runs straight through the parked agent.
    assert smooth_path(plan, 0, empty_ws, query, rng, p_skip=1.0) is plan


# ------------------------------------------------------------
# Test 2: anytime refinement
# ------------------------------------------------------------
def test_refine_straightens_a_zigzag(empty_ws, rng):
    zigzag = [(0.0, 0.0), (0.35, 0.35), (0.7, 0.0), (1.05, 0.35), (1.4, 0.0), (1.75, 0.35), (2.1, 0.0)]
    plan, query = _plan(zigzag, (2.1, 0.0))
    assert check_plan(plan, query, empty_ws) == []
    params = PlannerParams(node_budget=2000, deadline_ms=60_000.0)
    out = refine(plan, query, empty_ws, params, SearchBudget(node_budget=2000), rng)
    assert out.flowtime < plan.flowtime
    assert check_plan(out, query, empty_ws) == []


def test_refine_leaves_an_optimal_plan_alone(empty_ws, rng):
    plan, query = _plan([(0.0, 0.0), (0.5, 0.0), (1.0, 0.0)], (1.0, 0.0))
    params = PlannerParams(node_budget=500, deadline_ms=60_000.0)
    out = refine(plan, query, empty_ws, params, SearchBudget(node_budget=500), rng)
    assert out.flowtime == plan.flowtime


def test_crossing_improvements_are_monotone(mixed_ws):
    starts = [[-2.0, -2.0, 1.0], [2.0, -2.0, 1.0], [2.0, 2.0, 1.0], [-2.5, 2.5, 1.0]]
    targets = [[2.0, 2.0, 0.6], [-2.0, 2.0, 1.4], [-2.0, -2.0, 1.0], [2.5, -2.5, 1.0]]
    query = ProblemQuery(starts=starts, targets=targets, r_agent=0.2, r_target=0.1, d_travel=0.5, seed=5)
    params = PlannerParams(node_budget=6000, deadline_ms=60_000.0)
    plan = solve(query, mixed_ws, params)

    trace = [ft for _, _, ft in plan.stats.trace]
    assert trace[0] >= plan.flowtime
    assert all(later < earlier for earlier, later in zip(trace, trace[1:]))
    assert [n for _, n, _ in plan.stats.trace] == sorted(n for _, n, _ in plan.stats.trace)
    assert check_plan(plan, query, mixed_ws) == []


def test_refinement_can_be_switched_off(empty_ws):
    query = ProblemQuery(
        starts=[[-2.0, 0.0, 1.0], [2.0, 0.0, 1.0]],
        targets=[[2.0, 0.0, 1.0], [-2.0, 0.0, 1.0]],
        r_agent=0.2,
        r_target=0.1,
        d_travel=0.5,
    )
    params = PlannerParams(node_budget=4000, deadline_ms=60_000.0, refine=False)
    plan = solve(query, empty_ws, params)
    assert len(plan.stats.trace) == 1
    assert plan.stats.trace[0][2] == plan.flowtime
