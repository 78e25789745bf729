from ._obstacles import Obstacle, SphereObstacle, BoxObstacle, PoleObstacle, obstacle_from_spec
from ._workspace import Workspace
from ._grid import OccupancyGrid
from ._geometry import pair_min_distance, swept_pair_distances

__all__ = [
    "Obstacle",
    "SphereObstacle",
    "BoxObstacle",
    "PoleObstacle",
    "obstacle_from_spec",
    "Workspace",
    "OccupancyGrid",
    "pair_min_distance",
    "swept_pair_distances",
]
