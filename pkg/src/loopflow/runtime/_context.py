from dataclasses import dataclass
from typing import Callable, Optional

from loopflow._utils.callback_utils import call_callback, validate_callback
from loopflow.logger import get_logger
from loopflow.schemas import CollisionEvent, LogLevel, ReplanRecord


@dataclass
class MissionHooks:
    """
    Optional callbacks fired by the mission runner.

    on_replan(record):          after every replan attempt (hit, cold or miss)
    on_goal(agent, goal, t):    when an agent receives a goal
    on_collision(event):        for every tick the online checker flags
    """

    on_replan: Optional[Callable] = None
    on_goal: Optional[Callable] = None
    on_collision: Optional[Callable] = None

    def __post_init__(self):
        validate_callback(self.on_replan, ["record"], "on_replan")
        validate_callback(self.on_goal, ["agent", "goal", "t"], "on_goal")
        validate_callback(self.on_collision, ["event"], "on_collision")


class MissionContext:
    """
    Logging, hooks and the event log of one mission run.

    Attributes:
        name (str): Scenario label used in the logger name.
        verbose (bool): If True, progress messages are logged.
        hooks (MissionHooks): User callbacks.
        events (list[dict]): Replans, goal assignments and reuse hits for the events CSV.
    """

    def __init__(self, name: str = "mission", verbose: bool = False, hooks: Optional[MissionHooks] = None):
        self.name = name
        self.verbose = verbose
        self.logger = get_logger(f"[Mission:{name}]")
        self.hooks = hooks or MissionHooks()
        self.events: list[dict] = []

    def _log(self, message: str, level: LogLevel = LogLevel.INFO):
        if self.verbose:
            if level == LogLevel.INFO:
                self.logger.info(message)
            elif level == LogLevel.WARNING:
                self.logger.warning(message)
            elif level == LogLevel.ERROR:
                self.logger.error(message)
            else:
                self.logger.info(message)

    def event(self, t: float, kind: str, agent: Optional[int] = None, detail: str = "") -> None:
        self.events.append({"t": round(float(t), 6), "kind": kind, "agent": "" if agent is None else agent, "detail": detail})

    # ---------- Hooks ---------- #
    def replanned(self, record: ReplanRecord) -> None:
        if record.miss:
            self.event(record.t, "miss", detail=record.trigger)
            self._log(f"[MISS] t={record.t:.2f}s trigger={record.trigger}", LogLevel.WARNING)
        else:
            kind = "reuse_hit" if record.reuse_hit else "replan"
            self.event(record.t, kind, detail=f"v{record.version} flowtime={record.flowtime} k={record.reuse_k}")
            tag = "[REUSE]" if record.reuse_hit else "[REPLAN]"
            self._log(f"{tag} t={record.t:.2f}s v{record.version} flowtime={record.flowtime} trigger={record.trigger}")
        call_callback(self.hooks.on_replan, record)

    def goal_assigned(self, agent: int, goal, t: float) -> None:
        goal = [round(float(x), 6) for x in goal]
        self.event(t, "goal", agent, str(goal))
        self._log(f"[GOAL] t={t:.2f}s agent {agent} -> {goal}")
        call_callback(self.hooks.on_goal, agent, goal, t)

    def collided(self, event: CollisionEvent) -> None:
        self._log(f"[COLLISION] t={event.t:.2f}s {event.kind} agents={event.agents} d={event.distance:.3f}", LogLevel.ERROR)
        call_callback(self.hooks.on_collision, event)
