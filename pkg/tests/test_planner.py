from collections import deque

import numpy as np
import pytest

from loopflow._utils.exception import NoSolutionWithinDeadline
from loopflow.planner import (
    ConfigurationIndex,
    Plan,
    ProblemQuery,
    SearchBudget,
    build_candidates,
    build_roadmaps,
    check_plan,
    generate_configuration,
    is_duplicate,
    settled_indices,
    solve,
    successor_set,
)
from loopflow.planner._search import SAFETY_EPS
from loopflow.roadmap import Roadmap, build_roadmap
from loopflow.runtime import make_instance
from loopflow.schemas import PlannerParams, ViolationKind
from loopflow.workspace import PoleObstacle, Workspace

from conftest import HI, LO


def _query(starts, targets, **kw):
    kw.setdefault("r_agent", 0.2)
    kw.setdefault("r_target", 0.1)
    kw.setdefault("d_travel", 0.5)
    return ProblemQuery(starts=starts, targets=targets, **kw)


def _line_roadmap(direction):
    """Two vertices whose cost-to-go falls along `direction` through the origin."""
    d = np.asarray(direction, dtype=float)
    return Roadmap.from_edges([-d, d], [(0, 1)], target_index=1, neighbor_radius=1.5)


# ------------------------------------------------------------
# Test 1: duplicate detection against a linear scan
# ------------------------------------------------------------
def test_configuration_index_matches_linear_scan(rng):
    eps = 0.125
    visited = rng.uniform(-1.0, 1.0, size=(1000, 3, 3))
    index = ConfigurationIndex(3, eps)
    for q in visited:
        index.add(q)

    queries = np.concatenate(
        [
            visited[rng.integers(0, 1000, 50)] + rng.uniform(-0.08, 0.08, size=(50, 3, 3)),
            rng.uniform(-1.0, 1.0, size=(50, 3, 3)),
        ]
    )
    for q in queries:
        expected = bool(np.any(np.linalg.norm(visited - q, axis=2).max(axis=1) <= eps))
        assert is_duplicate(q, index) == expected


def test_duplicate_exact_and_displaced():
    index = ConfigurationIndex(2, 0.1)
    q = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 1.0]])
    index.add(q, payload="root")
    assert is_duplicate(q, index)
    assert index.find(q) == "root"

    shifted = q.copy()
    shifted[1, 0] += 0.15
    assert not is_duplicate(shifted, index)


def test_duplicate_rejects_mismatched_eps():
    index = ConfigurationIndex(1, 0.1)
    with pytest.raises(ValueError):
        is_duplicate(np.zeros((1, 3)), index, eps=0.2)
    with pytest.raises(ValueError):
        ConfigurationIndex(1, 0.0)


# ------------------------------------------------------------
# Test 2: motion primitives
# ------------------------------------------------------------
def test_successor_set_identity_frame():
    rm = _line_roadmap([1.0, 0.0, 0.0])
    succ = successor_set([0.0, 0.0, 0.0], rm, 0.5)
    assert succ.shape == (7, 3)
    expected = {
        (0.5, 0.0, 0.0),
        (-0.5, 0.0, 0.0),
        (0.0, 0.5, 0.0),
        (0.0, -0.5, 0.0),
        (0.0, 0.0, 0.5),
        (0.0, 0.0, -0.5),
        (0.0, 0.0, 0.0),
    }
    assert {tuple(np.round(row, 9) + 0.0) for row in succ} == expected


def test_successor_set_rotates_forward_primitive():
    rm = _line_roadmap([0.0, 1.0, 0.0])
    succ = successor_set([0.0, 0.0, 0.0], rm, 0.5)
    np.testing.assert_allclose(succ[0], [0.0, 0.5, 0.0], atol=1e-9)
    np.testing.assert_allclose(np.linalg.norm(succ[:-1], axis=1), 0.5)


def test_successor_set_planar_keeps_height(planar_ws):
    rm = build_roadmap(planar_ws, [2.0, 0.0, 1.0], 0.2)
    succ = successor_set([-2.0, 0.5, 1.0], rm, 0.5, planar=True)
    assert succ.shape == (5, 3)
    np.testing.assert_allclose(succ[:, 2], 1.0)


# ------------------------------------------------------------
# Test 3: joint move generation
# ------------------------------------------------------------
def test_single_agent_takes_forward_move(empty_ws, rng):
    query = _query([[-1.0, 0.0, 1.0]], [[2.0, 0.0, 1.0]])
    rms = build_roadmaps(query, empty_ws)
    table = build_candidates(query.starts, rms, query, empty_ws, 0.2, rng)
    nxt = generate_configuration(table, [0], (), 0.2)
    assert nxt is not None
    assert nxt[0, 0] == pytest.approx(-0.5, abs=0.05)


def test_head_on_agents_do_not_collide(empty_ws, rng):
    query = _query([[-0.5, 0.0, 1.0], [0.5, 0.0, 1.0]], [[2.0, 0.0, 1.0], [-2.0, 0.0, 1.0]])
    rms = build_roadmaps(query, empty_ws)
    table = build_candidates(query.starts, rms, query, empty_ws, 0.2, rng)
    nxt = generate_configuration(table, [0, 1], (), 0.2)
    assert nxt is not None
    assert not check_plan(np.stack([query.starts, nxt]), query, empty_ws, [ViolationKind.PAIRWISE_CLEARANCE])


def test_boxed_in_agent_stays(rng):
    ws = Workspace([-0.25, -0.25, 0.75], [0.25, 0.25, 1.25])
    query = _query([[0.0, 0.0, 1.0]], [[0.0, 0.2, 1.0]], r_target=0.01)
    rm = Roadmap.from_edges([[0.0, 0.0, 1.0], [0.0, 0.2, 1.0]], [(0, 1)], target_index=1)
    table = build_candidates(query.starts, [rm], query, ws, 0.2, rng)
    nxt = generate_configuration(table, [0], (), 0.2)
    np.testing.assert_array_equal(nxt, query.starts)


# ------------------------------------------------------------
# Test 4: solve on small instances
# ------------------------------------------------------------
def test_single_agent_straight_line(empty_ws, fast_params):
    query = _query([[0.0, 0.0, 1.0]], [[1.0, 0.0, 1.0]])
    plan = solve(query, empty_ws, fast_params)
    assert plan.feasible
    assert plan.flowtime == 2
    assert check_plan(plan, query, empty_ws) == []


def test_agents_already_at_targets(empty_ws, fast_params):
    starts = [[0.0, 0.0, 1.0], [1.0, 1.0, 1.0]]
    query = _query(starts, [[0.05, 0.0, 1.0], [1.0, 1.0, 1.0]])
    plan = solve(query, empty_ws, fast_params)
    assert plan.T == 0
    assert plan.flowtime == 0
    assert plan.normalized_cost == 0.0


def test_swap_on_a_segment(empty_ws, fast_params):
    query = _query([[-1.0, 0.0, 1.0], [1.0, 0.0, 1.0]], [[1.0, 0.0, 1.0], [-1.0, 0.0, 1.0]])
    plan = solve(query, empty_ws, fast_params)
    assert check_plan(plan, query, empty_ws) == []
    assert plan.makespan <= 12


@pytest.mark.parametrize("n,min_solved", [(1, 10), (2, 10), (4, 8), (8, 8)])
def test_solve_is_sound_on_seeded_instances(n, min_solved):
    params = PlannerParams(node_budget=3000, deadline_ms=60_000.0)
    solved = 0
    for k in range(10):
        inst = make_instance(n, k, seed=7)
        query = _query(inst.starts, inst.targets, seed=7)
        try:
            plan = solve(query, inst.ws, params, rng=np.random.default_rng(k))
        except NoSolutionWithinDeadline as e:
            # A miss must never hide a plan the checker rejected.
            assert not e.violations
            continue
        solved += 1
        assert plan.feasible
        assert check_plan(plan, query, inst.ws) == []
        trace = [ft for _, _, ft in plan.stats.trace]
        assert all(b < a for a, b in zip(trace, trace[1:]))
        assert plan.flowtime <= trace[-1]
    assert solved >= min_solved


def test_tiny_budget_raises_with_diagnostics(mixed_ws):
    query = _query([[-2.5, -2.5, 1.0], [2.5, 2.5, 1.0]], [[2.5, 2.5, 1.0], [-2.5, -2.5, 1.0]])
    params = PlannerParams(node_budget=1, deadline_ms=60_000.0)
    with pytest.raises(NoSolutionWithinDeadline) as info:
        solve(query, mixed_ws, params)
    assert info.value.nodes_expanded >= 1
    assert info.value.error_code == "NO_SOLUTION"


def test_checker_rejection_raises_instead_of_returning(mixed_ws, fast_params):
    # Start overlaps the sphere at (1.5, 1.5, 1.0); the start already counts as arrived.
    query = _query([[2.06, 1.5, 1.0]], [[2.15, 1.5, 1.0]])
    with pytest.raises(NoSolutionWithinDeadline) as info:
        solve(query, mixed_ws, fast_params)
    assert info.value.error_code == "NO_SOLUTION"
    assert info.value.violations
    assert ViolationKind.STATIC_CLEARANCE in {v.condition for v in info.value.violations}


def test_deterministic_budget_gives_identical_plans(mixed_ws):
    params = PlannerParams(node_budget=1500, deadline_ms=60_000.0)
    query = _query([[-2.5, -2.0, 1.0], [2.5, 2.0, 1.0]], [[2.5, 2.0, 1.0], [-2.5, -2.0, 1.0]], seed=3)
    a = solve(query, mixed_ws, params)
    b = solve(query, mixed_ws, params)
    assert a.steps.tobytes() == b.steps.tobytes()


def test_seed_steps_are_reused(empty_ws, fast_params):
    query = _query([[0.0, 0.0, 1.0]], [[1.0, 0.0, 1.0]])
    first = solve(query, empty_ws, fast_params)
    again = _query([[0.0, 0.0, 1.0]], [[1.0, 0.0, 1.0]], seed_steps=first.steps)
    plan = solve(again, empty_ws, fast_params)
    assert plan.stats.reused
    assert plan.flowtime <= first.flowtime


# ------------------------------------------------------------
# Test 5: breadth-first oracle on the same successor sets
# ------------------------------------------------------------
def _bfs_optimum(query, ws, rm, eps, max_depth=20):
    """Fewest steps to the goal for one agent over the candidate moves the search uses."""
    rng = np.random.default_rng(0)
    r_plan = query.r_agent + SAFETY_EPS
    seen = ConfigurationIndex(1, eps)
    start = query.starts.copy()
    seen.add(start)
    frontier = deque([(start, 0)])
    while frontier:
        config, depth = frontier.popleft()
        if query.at_goal(config).all():
            return depth
        if depth >= max_depth:
            continue
        table = build_candidates(config, [rm], query, ws, r_plan, rng)
        for slot in np.flatnonzero(table.valid[0]):
            nxt = table.moves[0, slot][None, :]
            if seen.contains(nxt):
                continue
            seen.add(nxt)
            frontier.append((nxt, depth + 1))
    return None


def test_refined_flowtime_close_to_bfs_optimum():
    ws = Workspace(LO, HI, [PoleObstacle([0.0, 0.0], 0.3, (0.0, 2.0))])
    params = PlannerParams(node_budget=3000, deadline_ms=60_000.0)
    gen = np.random.default_rng(42)
    checked = 0
    for k in range(6):
        start = ws.sample_free(gen, 0.2)
        target = ws.sample_free(gen, 0.2)
        query = _query([start], [target], seed=k)
        rm = build_roadmap(ws, target, 0.2)
        oracle = _bfs_optimum(query, ws, rm, params.eps_dup)
        if oracle is None:
            continue
        plan = solve(query, ws, params, rms=[rm], rng=np.random.default_rng(k))
        assert plan.flowtime <= oracle + 1
        checked += 1
    assert checked >= 3


# ------------------------------------------------------------
# Test 6: plan costs
# ------------------------------------------------------------
def test_plan_cost_properties():
    query = _query([[0.0, 0.0, 1.0], [0.0, 1.0, 1.0]], [[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]])
    steps = np.array(
        [
            [[0.0, 0.0, 1.0], [0.0, 1.0, 1.0]],
            [[0.5, 0.0, 1.0], [0.0, 1.0, 1.0]],
            [[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]],
            [[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]],
        ]
    )
    plan = Plan(steps, query)
    np.testing.assert_array_equal(plan.settled, [2, 0])
    assert plan.flowtime == 2
    assert plan.makespan == 2
    assert plan.trimmed().T == 2
    # Second agent sits on its target: straight steps floor at one.
    assert plan.normalized_cost == pytest.approx(2.0 / 3.0)
    np.testing.assert_array_equal(settled_indices(steps[:1]), [0, 0])


def test_plan_rejects_bad_shape():
    query = _query([[0.0, 0.0, 1.0]], [[1.0, 0.0, 1.0]])
    with pytest.raises(ValueError):
        Plan(np.zeros((3, 2)), query)


# ------------------------------------------------------------
# Test 7: checker on hand-built plans
# ------------------------------------------------------------
def test_checker_reports_crossing(empty_ws):
    query = _query([[-0.5, 0.0, 1.0], [0.0, -0.5, 1.0]], [[0.5, 0.0, 1.0], [0.0, 0.5, 1.0]], d_travel=1.0)
    steps = np.stack([query.starts, query.targets])
    found = check_plan(steps, query, empty_ws)
    assert len(found) == 1
    assert found[0].condition == ViolationKind.PAIRWISE_CLEARANCE
    assert found[0].step == 0
    assert found[0].agents == [0, 1]
    assert found[0].margin == pytest.approx(0.4)


def test_checker_reports_long_step(empty_ws):
    query = _query([[0.0, 0.0, 1.0]], [[0.505, 0.0, 1.0]])
    steps = np.stack([query.starts, query.targets])
    found = check_plan(steps, query, empty_ws)
    assert [v.condition for v in found] == [ViolationKind.STEP_LENGTH]
    assert found[0].margin == pytest.approx(0.005)


def test_checker_start_goal_and_clearance(mixed_ws):
    query = _query([[-2.5, -2.5, 1.0]], [[0.0, -1.0, 1.0]])
    steps = np.array([[[-2.4, -2.5, 1.0]], [[-2.4, -2.5, 1.0]]])
    kinds = {v.condition for v in check_plan(steps, query, mixed_ws)}
    assert kinds == {ViolationKind.START, ViolationKind.GOAL}

    through_pole = np.array([[[0.0, -1.45, 1.0]], [[0.0, -1.0, 1.0]]])
    q2 = _query([[0.0, -1.45, 1.0]], [[0.0, -1.0, 1.0]])
    kinds = {v.condition for v in check_plan(through_pole, q2, mixed_ws)}
    assert ViolationKind.STATIC_CLEARANCE in kinds


def test_checker_empty_plan_means_stay(empty_ws):
    query = _query([[0.0, 0.0, 1.0]], [[0.0, 0.0, 1.0]])
    assert check_plan(np.empty((0, 1, 3)), query, empty_ws) == []
    far = _query([[0.0, 0.0, 1.0]], [[1.0, 0.0, 1.0]])
    assert [v.condition for v in check_plan(np.empty((0, 1, 3)), far, empty_ws)] == [ViolationKind.GOAL]


def test_checker_rejects_agent_count_mismatch(empty_ws):
    query = _query([[0.0, 0.0, 1.0], [1.0, 0.0, 1.0]], [[0.0, 0.0, 1.0], [1.0, 0.0, 1.0]])
    found = check_plan(np.zeros((2, 1, 3)), query, empty_ws)
    assert found[0].condition == ViolationKind.START


# ------------------------------------------------------------
# Test 8: budgets
# ------------------------------------------------------------
def test_budget_slices_share_the_parent_count():
    budget = SearchBudget(node_budget=100).start()
    child = budget.slice(0.25)
    assert child.node_budget == 50
    for _ in range(50):
        child.tick()
    assert child.exhausted()
    assert budget.expansions == 50
    assert not budget.exhausted()
    assert budget.deterministic
