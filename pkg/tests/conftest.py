import numpy as np
import pytest

from loopflow.schemas import PlannerParams, RoadmapParams, Scenario
from loopflow.workspace import BoxObstacle, PoleObstacle, SphereObstacle, Workspace

LO = [-3.0, -3.0, 0.0]
HI = [3.0, 3.0, 2.0]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def empty_ws():
    return Workspace(LO, HI)


@pytest.fixture
def mixed_ws():
    return Workspace(
        LO,
        HI,
        [
            SphereObstacle([1.5, 1.5, 1.0], 0.4),
            BoxObstacle([-2.0, 0.5, 0.0], [-1.0, 1.5, 1.2]),
            PoleObstacle([0.0, -1.0], 0.3, (0.0, 2.0)),
        ],
    )


@pytest.fixture
def planar_ws():
    return Workspace(LO, HI, [PoleObstacle([0.0, 0.0], 0.3, (0.0, 2.0))], plane_z=1.0)


@pytest.fixture
def fast_params():
    """Deterministic planner budget so tests do not depend on machine speed."""
    return PlannerParams(node_budget=4000, deadline_ms=60_000.0)


@pytest.fixture
def roadmap_params():
    return RoadmapParams()


def make_scenario(**sections) -> Scenario:
    data = {"agents": {"starts": [[-2.0, 0.0, 1.0]]}}
    data.update(sections)
    return Scenario.model_validate(data)
