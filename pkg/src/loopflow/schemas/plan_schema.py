from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field

from .scenario_schema import Vec3


class ViolationKind(str, Enum):
    START = "start"
    GOAL = "goal"
    STEP_LENGTH = "step_length"
    STATIC_CLEARANCE = "static_clearance"
    PAIRWISE_CLEARANCE = "pairwise_clearance"


class Violation(BaseModel):
    """One broken solution condition; margin is how far past the limit it is (meters)."""

    condition: ViolationKind
    step: int
    agents: List[int]
    margin: float
    detail: Optional[str] = None


class PlanDocument(BaseModel):
    """On-disk plan: full joint steps so pairwise checks need no re-alignment."""

    steps: List[List[Vec3]] = []
    flowtime: int = 0
    normalized_cost: float = 0.0
    feasible: bool = True


class LogLevel(Enum):
    INFO = "info"
    WARNING = "warning"
    ERROR = "error"
