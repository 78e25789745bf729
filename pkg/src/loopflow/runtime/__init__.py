from ._snapshot import PlanSnapshot, SnapshotBox, WorldSnapshot
from ._context import MissionContext, MissionHooks
from ._mission import GoalSamplingFailed, GoalStream, assign_greedy, sample_in_region, sample_positions
from ._reuse import ReuseHit, offending_agents, repair_query, try_reuse
from ._runner import (
    EVENT_COLUMNS,
    TRAJECTORY_COLUMNS,
    MissionResult,
    MissionRunner,
    ReplanOutcome,
    run_mission,
    scenario_query,
    write_events_csv,
    write_trajectory_csv,
)
from ._async import run_mission_async
from ._bench import BENCH_COLUMNS, BenchInstance, bench_scalability, bench_summary_rows, make_instance, write_bench_csv

__all__ = [
    "PlanSnapshot",
    "SnapshotBox",
    "WorldSnapshot",
    "MissionContext",
    "MissionHooks",
    "GoalSamplingFailed",
    "GoalStream",
    "assign_greedy",
    "sample_in_region",
    "sample_positions",
    "ReuseHit",
    "offending_agents",
    "repair_query",
    "try_reuse",
    "EVENT_COLUMNS",
    "TRAJECTORY_COLUMNS",
    "MissionResult",
    "MissionRunner",
    "ReplanOutcome",
    "run_mission",
    "scenario_query",
    "write_events_csv",
    "write_trajectory_csv",
    "run_mission_async",
    "BENCH_COLUMNS",
    "BenchInstance",
    "bench_scalability",
    "bench_summary_rows",
    "make_instance",
    "write_bench_csv",
]
