import json
from enum import Enum
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from loopflow._utils.exception import ScenarioError
from loopflow.workspace import Workspace

SCHEMA_VERSION = "1"

Vec3 = Annotated[List[float], Field(min_length=3, max_length=3)]
Vec2 = Annotated[List[float], Field(min_length=2, max_length=2)]
ScheduleRow = Annotated[List[float], Field(min_length=4, max_length=4)]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


def _check_schedule(schedule: Optional[List[List[float]]]) -> Optional[List[List[float]]]:
    if schedule is None:
        return None
    if not schedule:
        raise ValueError("schedule must contain at least one [t, x, y, z] waypoint")
    times = [row[0] for row in schedule]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError(f"schedule times must be strictly increasing, got {times}")
    return schedule


# ---------- Workspace ---------- #
class SphereSpec(_Strict):
    type: Literal["sphere"] = "sphere"
    center: Vec3
    radius: float = Field(gt=0)
    schedule: Optional[List[ScheduleRow]] = None

    @field_validator("schedule")
    @classmethod
    def check_schedule(cls, v):
        return _check_schedule(v)


class BoxSpec(_Strict):
    type: Literal["box"] = "box"
    lo: Vec3 = Field(alias="min")
    hi: Vec3 = Field(alias="max")
    schedule: Optional[List[ScheduleRow]] = None

    @field_validator("schedule")
    @classmethod
    def check_schedule(cls, v):
        return _check_schedule(v)

    @model_validator(mode="after")
    def _ordered(self):
        if any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ValueError(f"box min {self.lo} must be below max {self.hi} on every axis")
        return self


class PoleSpec(_Strict):
    type: Literal["pole"] = "pole"
    xy: Vec2
    radius: float = Field(gt=0)
    z: Vec2
    schedule: Optional[List[ScheduleRow]] = None

    @field_validator("schedule")
    @classmethod
    def check_schedule(cls, v):
        return _check_schedule(v)

    @model_validator(mode="after")
    def _ordered(self):
        if self.z[0] >= self.z[1]:
            raise ValueError(f"pole z range {self.z} must be increasing")
        return self


ObstacleSpec = Annotated[Union[SphereSpec, BoxSpec, PoleSpec], Field(discriminator="type")]


class WorkspaceSpec(_Strict):
    bounds_min: Vec3 = [-3.0, -3.0, 0.0]
    bounds_max: Vec3 = [3.0, 3.0, 2.0]
    planar: bool = False
    plane_z: Optional[float] = None
    obstacles: List[ObstacleSpec] = []

    @model_validator(mode="after")
    def _bounds(self):
        if any(a >= b for a, b in zip(self.bounds_min, self.bounds_max)):
            raise ValueError("bounds_min must be strictly below bounds_max on every axis")
        if self.plane_z is not None and not (self.bounds_min[2] <= self.plane_z <= self.bounds_max[2]):
            raise ValueError(f"plane_z {self.plane_z} lies outside the z bounds")
        # Raises ValueError for obstacles outside W or mixed z extents in planar mode.
        Workspace.from_spec(self)
        return self


# ---------- Agents / mission ---------- #
class AgentsSpec(_Strict):
    n: Optional[int] = Field(default=None, ge=1)
    r_agent: float = Field(default=0.2, gt=0)
    starts: Optional[List[Vec3]] = None

    @model_validator(mode="after")
    def _count(self):
        if self.starts is None and self.n is None:
            raise ValueError("either 'n' or 'starts' is required")
        if self.starts is not None:
            if self.n is not None and self.n != len(self.starts):
                raise ValueError(f"n={self.n} but {len(self.starts)} starts were given")
            if not self.starts:
                raise ValueError("starts must not be empty")
        return self

    @property
    def count(self) -> int:
        return len(self.starts) if self.starts is not None else int(self.n)


class MissionMode(str, Enum):
    ONESHOT = "oneshot"
    SYNC = "sync"
    ASYNC = "async"
    TARGET_FOLLOWING = "target_following"


class DiskRegion(_Strict):
    type: Literal["disk"] = "disk"
    center: Vec3 = [0.0, 0.0, 1.0]
    radius: float = Field(default=2.0, gt=0)


class BoxRegion(_Strict):
    type: Literal["box"] = "box"
    lo: Vec3 = Field(alias="min")
    hi: Vec3 = Field(alias="max")


GoalRegion = Annotated[Union[DiskRegion, BoxRegion], Field(discriminator="type")]


class TargetSpec(_Strict):
    """The scripted robot followed in target_following missions."""

    schedule: List[ScheduleRow]
    radius: float = Field(default=0.2, gt=0)
    formation_radius: float = Field(default=1.0, gt=0)

    @field_validator("schedule")
    @classmethod
    def check_schedule(cls, v):
        return _check_schedule(v)


class MissionSpec(_Strict):
    mode: MissionMode = MissionMode.ONESHOT
    goals: Optional[List[Vec3]] = None
    region: Optional[GoalRegion] = None
    duration_s: float = Field(default=60.0, gt=0)
    target: Optional[TargetSpec] = None

    @model_validator(mode="after")
    def _target(self):
        if self.mode == MissionMode.TARGET_FOLLOWING and self.target is None:
            raise ValueError("target_following missions require a 'target'")
        return self


# ---------- Planner / roadmap / controller / runtime ---------- #
class PlannerParams(_Strict):
    d_travel: float = Field(default=0.5, gt=0)
    r_target: float = Field(default=0.1, gt=0)
    eps_dup: Optional[float] = Field(default=None, gt=0)
    p_skip: float = Field(default=0.2, ge=0, lt=1)
    lns_size: int = Field(default=2, ge=1)
    mc_restarts: int = Field(default=8, ge=0)
    refine: bool = True
    smoothing: bool = True
    deadline_ms: float = Field(default=1000.0, gt=0)
    node_budget: Optional[int] = Field(default=None, ge=1)
    verbose: bool = False

    @model_validator(mode="after")
    def _eps(self):
        if self.eps_dup is None:
            self.eps_dup = 0.25 * self.d_travel
        if not (0 < self.eps_dup < self.d_travel):
            raise ValueError(f"eps_dup {self.eps_dup} must lie in (0, d_travel={self.d_travel})")
        return self

    @property
    def deterministic(self) -> bool:
        return self.node_budget is not None


class RoadmapParams(_Strict):
    lattice_h: float = Field(default=0.5, gt=0)
    connect_radius: float = Field(default=0.95, gt=0)
    neighbor_radius: float = Field(default=1.0, ge=0)

    @model_validator(mode="after")
    def _connect(self):
        if self.connect_radius < self.lattice_h:
            raise ValueError("connect_radius must reach at least the axis neighbours (>= lattice_h)")
        return self


class ControllerParams(_Strict):
    ctrl_hz: float = Field(default=100.0, gt=0)
    q_pos: float = Field(default=8.0, gt=0)
    q_vel: float = Field(default=4.0, gt=0)
    r_acc: float = Field(default=1.0, gt=0)
    k_ff: float = 1.0
    a_max: float = Field(default=6.0, gt=0)
    disturbance_sigma: float = Field(default=0.0, ge=0)
    disturbance_clip: float = Field(default=3.0, gt=0)


class RuntimeConfig(_Strict):
    replan_hz: float = Field(default=10.0, gt=0, le=20)
    periodic: bool = True
    speed: float = Field(default=0.5, gt=0)
    reuse_delta: Optional[float] = Field(default=None, ge=0)
    sigma_repair: float = Field(default=0.05, gt=0)
    repair_rounds: int = Field(default=200, ge=1)
    deadline_fraction: float = Field(default=0.8, gt=0, le=1)
    max_misses: int = Field(default=10, ge=1)
    obstacle_margin: float = Field(default=0.05, ge=0)
    planning_margin: float = Field(default=0.05, ge=0)
    arrival_tolerance: float = Field(default=0.05, ge=0)
    deviation_trigger: Optional[float] = Field(default=None, gt=0)
    collision_tolerance: float = Field(default=0.01, ge=0)
    # A goal left open longer than this (simulated seconds) fails the mission.
    liveness_s: float = Field(default=60.0, gt=0)
    seed: int = 0


# ---------- Scenario ---------- #
class Scenario(_Strict):
    version: Literal["1"] = SCHEMA_VERSION
    workspace: WorkspaceSpec = Field(default_factory=WorkspaceSpec)
    agents: AgentsSpec
    mission: MissionSpec = Field(default_factory=MissionSpec)
    planner: PlannerParams = Field(default_factory=PlannerParams)
    roadmap: RoadmapParams = Field(default_factory=RoadmapParams)
    controller: ControllerParams = Field(default_factory=ControllerParams)
    runtime: RuntimeConfig = Field(default_factory=RuntimeConfig)

    @model_validator(mode="after")
    def _cross_fields(self):
        if self.controller.ctrl_hz < 5 * self.runtime.replan_hz:
            raise ValueError(
                f"ctrl_hz ({self.controller.ctrl_hz}) must be at least 5 x replan_hz ({self.runtime.replan_hz})"
            )
        lo = np.asarray(self.workspace.bounds_min)
        hi = np.asarray(self.workspace.bounds_max)
        n = self.agents.count
        for label, points in (("starts", self.agents.starts), ("mission.goals", self.mission.goals)):
            if points is None:
                continue
            if len(points) != n:
                raise ValueError(f"{label} has {len(points)} entries for {n} agents")
            for i, p in enumerate(points):
                if np.any(np.asarray(p) < lo) or np.any(np.asarray(p) > hi):
                    raise ValueError(f"{label}[{i}] = {p} lies outside the workspace bounds")
        if self.agents.starts is not None:
            pts = np.asarray(self.agents.starts, dtype=float)
            for i in range(n):
                for j in range(i + 1, n):
                    d = float(np.linalg.norm(pts[i] - pts[j]))
                    if d < 2 * self.agents.r_agent:
                        raise ValueError(
                            f"starts of agents {i} and {j} are {d:.3f} m apart; at least 2*r_agent = "
                            f"{2 * self.agents.r_agent:.3f} m required"
                        )
        return self

    @property
    def reuse_delta(self) -> float:
        if self.runtime.reuse_delta is not None:
            return self.runtime.reuse_delta
        return 0.5 * self.planner.d_travel

    @property
    def plane_z(self) -> Optional[float]:
        ws = self.workspace
        if not ws.planar:
            return None
        if ws.plane_z is not None:
            return ws.plane_z
        return 0.5 * (ws.bounds_min[2] + ws.bounds_max[2])

    def dump(self) -> str:
        """Canonical JSON with every default filled in."""
        return self.model_dump_json(by_alias=True, indent=2)


def parse_scenario(text: str) -> Scenario:
    """
    Strictly parse a scenario document.

    Raises:
        ScenarioError: With one diagnostic per problem (path, expected, message).
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(
            f"Scenario is not valid JSON: {e.msg}",
            diagnostics=[{"path": f"line {e.lineno}:{e.colno}", "expected": "json", "message": e.msg}],
        ) from e

    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        diagnostics = [
            {
                "path": ".".join(str(p) for p in err["loc"]) or "<root>",
                "expected": err["type"],
                "message": err["msg"],
            }
            for err in e.errors()
        ]
        raise ScenarioError(f"Scenario failed validation with {len(diagnostics)} error(s).", diagnostics) from e
