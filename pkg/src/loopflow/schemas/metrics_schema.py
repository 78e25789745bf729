from typing import Dict, List, Optional

from pydantic import BaseModel, Field

# Fields measured with the wall clock; excluded when comparing runs.
WALL_CLOCK_FIELDS = ("planning_ms", "t_first_ms", "wall_s")


class ReplanRecord(BaseModel):
    t: float
    version: int
    trigger: str
    planning_ms: float
    flowtime: Optional[int] = None
    reuse_hit: bool = False
    reuse_k: Optional[int] = None
    nodes: int = 0
    repaired: bool = False
    miss: bool = False


class TaskRecord(BaseModel):
    """One goal assignment; duration runs until the agent's next assignment."""

    agent: int
    goal: List[float]
    t_assigned: float
    distance: float
    t_arrived: Optional[float] = None
    duration: Optional[float] = None


class CollisionEvent(BaseModel):
    t: float
    tick: int
    kind: str
    agents: List[int]
    distance: float


class TrackingSummary(BaseModel):
    agent: int
    max_error: float
    mean_error: float
    p95_error: float


class MissionSummary(BaseModel):
    ticks: int = 0
    sim_time: float = 0.0
    replans: int = 0
    reuse_hit_rate: Optional[float] = None
    mean_planning_ms_hit: Optional[float] = None
    mean_planning_ms_cold: Optional[float] = None
    tasks_completed: int = 0
    task_spearman: Optional[float] = None
    max_tracking_error: float = 0.0
    collisions: int = 0


class MetricsLog(BaseModel):
    seed: int
    mode: str
    completed: bool = False
    abort_reason: Optional[str] = None
    replans: List[ReplanRecord] = []
    tasks: List[TaskRecord] = []
    collisions: List[CollisionEvent] = []
    tracking: List[TrackingSummary] = []
    tracking_error: List[List[float]] = []
    summary: MissionSummary = Field(default_factory=MissionSummary)
    wall_s: float = 0.0

    def deterministic_view(self) -> Dict:
        """The document with wall-clock measured fields removed."""
        data = self.model_dump(mode="json")

        def _strip(obj):
            if isinstance(obj, dict):
                return {k: _strip(v) for k, v in obj.items() if k not in WALL_CLOCK_FIELDS and not k.startswith("mean_planning_ms")}
            if isinstance(obj, list):
                return [_strip(v) for v in obj]
            return obj

        return _strip(data)


class BenchRow(BaseModel):
    n: int
    instance: int
    success: bool
    t_first_ms: Optional[float] = None
    cost: Optional[float] = None
