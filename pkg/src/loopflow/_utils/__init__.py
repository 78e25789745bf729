from .exception import (
    LoopflowError,
    TargetBlocked,
    EmptyRoadmap,
    NotUnit,
    NoSolutionWithinDeadline,
    NonConvergent,
    RepairFailed,
    MissionAborted,
    ScenarioError,
    PlanFileError,
)
from .random_streams import SeedStreams
from .serialization import to_serializable

__all__ = [
    "LoopflowError",
    "TargetBlocked",
    "EmptyRoadmap",
    "NotUnit",
    "NoSolutionWithinDeadline",
    "NonConvergent",
    "RepairFailed",
    "MissionAborted",
    "ScenarioError",
    "PlanFileError",
    "SeedStreams",
    "to_serializable",
]
