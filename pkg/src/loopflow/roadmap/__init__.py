from ._roadmap import Roadmap, cost_to_go
from ._builder import RoadmapBuilder, build_roadmap
from ._rotation import rotation_to

__all__ = [
    "Roadmap",
    "RoadmapBuilder",
    "build_roadmap",
    "cost_to_go",
    "rotation_to",
]
