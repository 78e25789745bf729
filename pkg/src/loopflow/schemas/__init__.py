from .scenario_schema import (
    SCHEMA_VERSION,
    Scenario,
    WorkspaceSpec,
    SphereSpec,
    BoxSpec,
    PoleSpec,
    AgentsSpec,
    MissionSpec,
    MissionMode,
    DiskRegion,
    BoxRegion,
    TargetSpec,
    PlannerParams,
    RoadmapParams,
    ControllerParams,
    RuntimeConfig,
    parse_scenario,
)
from .plan_schema import PlanDocument, Violation, ViolationKind, LogLevel
from .metrics_schema import (
    MetricsLog,
    ReplanRecord,
    TaskRecord,
    CollisionEvent,
    TrackingSummary,
    MissionSummary,
    BenchRow,
    WALL_CLOCK_FIELDS,
)


__all__ = [
    # Scenario
    "SCHEMA_VERSION",
    "Scenario",
    "WorkspaceSpec",
    "SphereSpec",
    "BoxSpec",
    "PoleSpec",
    "AgentsSpec",
    "MissionSpec",
    "MissionMode",
    "DiskRegion",
    "BoxRegion",
    "TargetSpec",
    "PlannerParams",
    "RoadmapParams",
    "ControllerParams",
    "RuntimeConfig",
    "parse_scenario",

    # Plans
    "PlanDocument",
    "Violation",
    "ViolationKind",

    "LogLevel",

    # Metrics
    "MetricsLog",
    "ReplanRecord",
    "TaskRecord",
    "CollisionEvent",
    "TrackingSummary",
    "MissionSummary",
    "BenchRow",
    "WALL_CLOCK_FIELDS",
]
