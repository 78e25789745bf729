import numpy as np
import pytest

from loopflow.workspace import (
    BoxObstacle,
    PoleObstacle,
    SphereObstacle,
    Workspace,
    obstacle_from_spec,
    pair_min_distance,
    swept_pair_distances,
)
from loopflow.schemas import Scenario

from conftest import HI, LO


def _sampled_segment_distance(obstacle, a, b, samples=4001):
    alphas = np.linspace(0.0, 1.0, samples)
    return min(obstacle.distance(a + s * (b - a)) for s in alphas)


# ------------------------------------------------------------
# Test 1: point distances per primitive
# ------------------------------------------------------------
def test_point_distances_closed_form():
    sphere = SphereObstacle([0.0, 0.0, 1.0], 0.5)
    assert sphere.distance([2.0, 0.0, 1.0]) == pytest.approx(1.5)
    assert sphere.distance([0.1, 0.0, 1.0]) == 0.0

    box = BoxObstacle([0.0, 0.0, 0.0], [1.0, 1.0, 1.0])
    assert box.distance([2.0, 2.0, 0.5]) == pytest.approx(np.sqrt(2.0))
    assert box.distance([0.5, 0.5, 0.5]) == 0.0

    pole = PoleObstacle([0.0, 0.0], 0.5, (0.0, 1.0))
    assert pole.distance([2.0, 0.0, 0.5]) == pytest.approx(1.5)
    assert pole.distance([0.0, 0.0, 3.0]) == pytest.approx(2.0)
    assert pole.distance([3.5, 0.0, 5.0]) == pytest.approx(5.0)


def test_tangent_sphere_counts_as_collision():
    ws = Workspace(LO, HI, [SphereObstacle([0.0, 0.0, 1.0], 0.5)])
    p = [1.0, 0.0, 1.0]
    assert not ws.point_free(p, 0.5)
    assert ws.point_free(p, 0.49)
    assert not ws.points_free(np.array([p]), 0.5)[0]


def test_bounds_shrink_by_radius(empty_ws):
    assert empty_ws.point_free([2.7, 0.0, 1.0], 0.2)
    assert not empty_ws.point_free([2.9, 0.0, 1.0], 0.2)
    assert not empty_ws.point_free([0.0, 0.0, 0.1], 0.2)


# ------------------------------------------------------------
# Test 2: swept segment distance against dense sampling
# ------------------------------------------------------------
@pytest.mark.parametrize(
    "obstacle",
    [
        SphereObstacle([0.3, -0.2, 1.0], 0.6),
        BoxObstacle([-0.5, -0.4, 0.6], [0.7, 0.5, 1.3]),
        PoleObstacle([0.2, 0.1], 0.4, (0.5, 1.4)),
    ],
    ids=["sphere", "box", "pole"],
)
def test_segment_distance_matches_dense_sampling(obstacle, rng):
    for _ in range(40):
        a = rng.uniform([-2.0, -2.0, 0.0], [2.0, 2.0, 2.0])
        b = a + rng.uniform(-1.5, 1.5, 3)
        exact = obstacle.segment_distance(a, b)
        sampled = _sampled_segment_distance(obstacle, a, b)
        assert exact <= sampled + 1e-9
        assert sampled - exact <= 2e-3


def test_batch_segment_distances_agree_with_exact(mixed_ws, rng):
    a = rng.uniform(LO, HI, (200, 3))
    b = a + rng.uniform(-0.6, 0.6, (200, 3))
    batch = mixed_ws.segment_distances(a, b)
    exact = np.array([mixed_ws.segment_clearance(x, y) for x, y in zip(a, b)])
    np.testing.assert_allclose(batch, exact, atol=1e-5)


def test_batch_point_distances_agree_with_exact(mixed_ws, rng):
    pts = rng.uniform(LO, HI, (300, 3))
    batch = mixed_ws.point_distances(pts)
    exact = np.array([mixed_ws.point_clearance(p) for p in pts])
    np.testing.assert_allclose(batch, exact, atol=1e-9)


def test_segment_crossing_obstacle_is_blocked(mixed_ws):
    # Straight through the pole at (0, -1).
    assert not mixed_ws.segment_free([-1.0, -1.0, 1.0], [1.0, -1.0, 1.0], 0.1)
    assert mixed_ws.segment_free([-1.0, -2.2, 1.0], [1.0, -2.2, 1.0], 0.1)


# ------------------------------------------------------------
# Test 3: pairwise swept distance
# ------------------------------------------------------------
def test_pair_min_distance_head_on_swap():
    # Two agents swapping along x meet in the middle.
    d = pair_min_distance([0, 0, 0], [1, 0, 0], [1, 0, 0], [0, 0, 0])
    assert d == pytest.approx(0.0)


def test_pair_min_distance_matches_sampling(rng):
    alphas = np.linspace(0.0, 1.0, 2001)
    for _ in range(50):
        a0, a1, b0, b1 = rng.uniform(-1.0, 1.0, (4, 3))
        sampled = min(np.linalg.norm((a0 + s * (a1 - a0)) - (b0 + s * (b1 - b0))) for s in alphas)
        exact = pair_min_distance(a0, a1, b0, b1)
        assert exact <= sampled + 1e-12
        assert sampled - exact <= 2e-3


def test_swept_pair_distances_broadcasts(rng):
    a0, a1 = rng.uniform(-1, 1, (2, 5, 3))
    b0, b1 = rng.uniform(-1, 1, (2, 5, 3))
    batch = swept_pair_distances(a0, a1, b0, b1)
    expected = [pair_min_distance(a0[i], a1[i], b0[i], b1[i]) for i in range(5)]
    np.testing.assert_allclose(batch, expected, atol=1e-12)


def test_stationary_pair_distance_is_gap():
    p, q = np.array([0.0, 0.0, 1.0]), np.array([0.4, 0.0, 1.0])
    assert pair_min_distance(p, p, q, q) == pytest.approx(0.4)


# ------------------------------------------------------------
# Test 4: moving obstacles and snapshots
# ------------------------------------------------------------
def test_scheduled_obstacle_moves_and_freezes():
    schedule = [[0.0, 0.0, 0.0, 1.0], [10.0, 5.0, 0.0, 1.0]]
    ws = Workspace(LO, HI, [SphereObstacle([0.0, 0.0, 1.0], 0.3, schedule)])
    assert ws.dynamic_obstacles and not ws.static_obstacles

    p = np.array([2.5, 1.0, 1.0])
    assert ws.clearance(p, t=5.0) == pytest.approx(0.7)
    # Holds the last waypoint after the schedule ends.
    assert ws.clearance([5.0, 1.0, 1.0], t=50.0) == pytest.approx(0.7)

    snap = ws.frozen(5.0, margin=0.1)
    assert not snap.dynamic_obstacles
    assert snap.point_clearance(p) == pytest.approx(0.6)
    # Raw clearance ignores the inflation.
    assert snap.clearance(p) == pytest.approx(0.7)


def test_obstacle_speed_from_schedule():
    moving = PoleObstacle([0.0, 0.0], 0.2, (0.0, 2.0), [[0, 0, 0, 0], [2, 1, 0, 0], [3, 1, 2, 0]])
    assert moving.speed == pytest.approx(2.0)
    assert PoleObstacle([0.0, 0.0], 0.2, (0.0, 2.0)).speed == 0.0


def test_obstacle_from_spec_roundtrip():
    scenario = Scenario.model_validate(
        {
            "agents": {"n": 1},
            "workspace": {
                "obstacles": [
                    {"type": "sphere", "center": [0, 0, 1], "radius": 0.5},
                    {"type": "box", "min": [1, 1, 0], "max": [2, 2, 1]},
                    {"type": "pole", "xy": [-1, -1], "radius": 0.2, "z": [0, 2]},
                ]
            },
        }
    )
    kinds = [obstacle_from_spec(o).kind for o in scenario.workspace.obstacles]
    assert kinds == ["sphere", "box", "pole"]
    ws = Workspace.from_spec(scenario.workspace)
    assert len(ws.static_obstacles) == 3


# ------------------------------------------------------------
# Test 5: occupancy grid, planar mode, sampling
# ------------------------------------------------------------
def test_occupancy_grid_is_conservative(mixed_ws, rng):
    r = 0.2
    grid = mixed_ws.occupancy(r, 0.25)
    pts = rng.uniform(LO, HI, (3000, 3))
    colliding = mixed_ws.point_distances(pts) <= r
    assert colliding.any()
    assert np.all(grid.occupied_many(pts[colliding]))
    assert mixed_ws.occupancy(r, 0.25) is grid
    assert 0.0 < grid.fill_ratio < 1.0


def test_planar_workspace_ignores_z_bounds(planar_ws):
    p = planar_ws.project_plane([1.0, 1.0, 0.0])
    assert p[2] == pytest.approx(1.0)
    assert planar_ws.in_bounds([1.0, 1.0, 5.0], 0.2)
    assert not planar_ws.point_free([0.3, 0.0, 1.0], 0.2)


def test_sample_free_returns_free_point(mixed_ws, rng):
    for _ in range(20):
        p = mixed_ws.sample_free(rng, 0.2)
        assert p is not None
        assert mixed_ws.point_free(p, 0.2)


# ------------------------------------------------------------
# Test 6: schedules place the reference point
# ------------------------------------------------------------
def test_schedule_places_pole_axis_not_declared_xy():
    schedule = [[0.0, 2.0, 2.0, 1.0], [10.0, 2.0, -2.0, 1.0]]
    ws = Workspace(LO, HI, [PoleObstacle([0.5, 0.5], 0.3, (0.0, 2.0), schedule)])
    assert ws.clearance([2.0, 2.0, 1.0], t=0.0) <= 0.0
    assert ws.clearance([0.5, 0.5, 1.0], t=0.0) > 1.0
    assert ws.clearance([2.0, 0.0, 1.0], t=5.0) <= 0.0


def test_schedule_places_sphere_center_not_declared_center():
    sphere = SphereObstacle([0.5, 0.5, 0.5], 0.2, [[0.0, 2.5, 2.5, 1.0], [4.0, -2.5, 2.5, 1.0]])
    np.testing.assert_allclose(sphere.position(0.0), [2.5, 2.5, 1.0])
    np.testing.assert_allclose(sphere.at(0.0).center, [2.5, 2.5, 1.0])
    np.testing.assert_allclose(sphere.at(2.0).center, [0.0, 2.5, 1.0])


def test_schedule_places_box_midpoint():
    box = BoxObstacle([0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [[0.0, -2.0, -2.0, 1.0]])
    frozen = box.at(3.0)
    np.testing.assert_allclose(frozen.lo, [-2.5, -2.5, 0.5])
    np.testing.assert_allclose(frozen.hi, [-1.5, -1.5, 1.5])


# ------------------------------------------------------------
# Test 7: workspace obstacle invariants
# ------------------------------------------------------------
@pytest.mark.parametrize(
    "obstacle",
    [
        SphereObstacle([3.5, 3.5, 1.0], 0.6),
        BoxObstacle([4.0, -1.0, 0.0], [5.0, 1.0, 2.0]),
        PoleObstacle([0.0, 0.0], 0.3, (2.5, 4.0)),
    ],
    ids=["sphere", "box", "pole"],
)
def test_static_obstacle_outside_bounds_is_rejected(obstacle):
    with pytest.raises(ValueError, match="outside the workspace bounds"):
        Workspace(LO, HI, [obstacle])


def test_obstacle_touching_bounds_is_accepted():
    # Sphere center outside W, but its surface reaches into it.
    ws = Workspace(LO, HI, [SphereObstacle([3.5, 0.0, 1.0], 0.6), BoxObstacle([-4, -4, -1], [4, 4, 3])])
    assert len(ws.static_obstacles) == 2


def test_planar_obstacles_need_equal_z_extents():
    poles = [PoleObstacle([0.0, 0.0], 0.3, (0.0, 2.0)), PoleObstacle([1.5, 1.5], 0.3, (0.0, 1.5))]
    with pytest.raises(ValueError, match="equal obstacle z extents"):
        Workspace(LO, HI, poles, plane_z=1.0)
    # Same shapes are fine off the plane.
    assert len(Workspace(LO, HI, poles).obstacles) == 2


def test_moving_obstacles_are_exempt_from_bounds_check():
    outside = SphereObstacle([0.0, 0.0, 0.0], 0.2, [[0.0, 8.0, 8.0, 1.0]])
    ws = Workspace(LO, HI, [outside])
    snap = ws.frozen(0.0)
    assert snap.static_obstacles and not snap.dynamic_obstacles
