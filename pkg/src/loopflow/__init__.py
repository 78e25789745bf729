from .workspace import Workspace
from .roadmap import Roadmap, RoadmapBuilder
from .planner import Plan, ProblemQuery, check_plan, solve
from .tracking import ReferenceTrajectory, derive_gains
from .runtime import MissionHooks, run_mission, run_mission_async
from .schemas import Scenario, parse_scenario
from .config import __version__, __app_name__, __description__


__all__ = [
    "Workspace",
    "Roadmap",
    "RoadmapBuilder",
    "Plan",
    "ProblemQuery",
    "check_plan",
    "solve",
    "ReferenceTrajectory",
    "derive_gains",
    "MissionHooks",
    "run_mission",
    "run_mission_async",
    "Scenario",
    "parse_scenario",
    "__version__",
    "__app_name__",
    "__description__",
]
