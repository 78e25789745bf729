from loopflow.schemas import PlannerParams

from ._types import Configuration, Plan, ProblemQuery, SolveStats, settled_indices
from ._budget import CancelToken, SearchBudget
from ._duplicates import ConfigurationIndex, is_duplicate
from ._successors import (
    PRIMITIVES,
    CandidateTable,
    build_candidates,
    generate_configuration,
    successor_set,
)
from ._search import ConfigurationSearch, SearchNode
from ._refine import Refiner, refine, smooth_path
from ._checker import check_plan
from ._solve import build_roadmaps, make_budget, solve

__all__ = [
    "PlannerParams",
    "Configuration",
    "Plan",
    "ProblemQuery",
    "SolveStats",
    "settled_indices",
    "CancelToken",
    "SearchBudget",
    "ConfigurationIndex",
    "is_duplicate",
    "PRIMITIVES",
    "CandidateTable",
    "build_candidates",
    "generate_configuration",
    "successor_set",
    "ConfigurationSearch",
    "SearchNode",
    "Refiner",
    "refine",
    "smooth_path",
    "check_plan",
    "build_roadmaps",
    "make_budget",
    "solve",
]
