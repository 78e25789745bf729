import csv
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist
from scipy.stats import spearmanr

from loopflow._utils.exception import (
    EmptyRoadmap,
    LoopflowError,
    MissionAborted,
    NoSolutionWithinDeadline,
    RepairFailed,
    TargetBlocked,
)
from loopflow._utils.random_streams import SeedStreams
from loopflow.planner import ProblemQuery, solve
from loopflow.roadmap import Roadmap, RoadmapBuilder
from loopflow.schemas import (
    CollisionEvent,
    LogLevel,
    MetricsLog,
    MissionMode,
    MissionSummary,
    ReplanRecord,
    Scenario,
    TaskRecord,
    TrackingSummary,
)
from loopflow.tracking import (
    Disturbance,
    ReferenceTrajectory,
    RobotState,
    TrajectorySample,
    control_step,
    derive_gains,
    step_plant,
)
from loopflow.workspace import SphereObstacle, Workspace

from ._context import MissionContext, MissionHooks
from ._mission import GoalStream, sample_positions
from ._reuse import repair_query, try_reuse
from ._snapshot import PlanSnapshot, SnapshotBox, WorldSnapshot

TRAJECTORY_COLUMNS = ("tick", "robot", "px", "py", "pz", "refx", "refy", "refz", "err")
EVENT_COLUMNS = ("t", "kind", "agent", "detail")

_PLANNER_MISSES = (NoSolutionWithinDeadline, TargetBlocked, EmptyRoadmap)


def _r6(x: float) -> float:
    return round(float(x), 6)


@dataclass
class MissionResult:
    metrics: MetricsLog
    trajectory: list = field(default_factory=list)
    events: list = field(default_factory=list)


@dataclass(frozen=True)
class ReplanOutcome:
    """What one planner run hands to the control side: a plan to publish, or the error."""

    record: ReplanRecord
    snapshot: Optional[PlanSnapshot] = None
    error: Optional[LoopflowError] = None
    # A failed repair ends the mission; a planner miss only counts toward max_misses.
    fatal: bool = False


class MissionRunner:
    """
    Closed replanning loop: trackers follow the latest published plan while
    the planner replans from the latest world snapshot.

    The two sides only exchange immutable snapshots through `SnapshotBox`es.
    Planning is split into `compute` (pure with respect to runner state) and
    `commit` (control side). `run()` drives both on one simulated clock
    (deterministic); the free-running variant in `run_mission_async` moves
    `compute` onto a worker thread.
    """

    def __init__(
        self,
        scenario: Scenario,
        hooks: Optional[MissionHooks] = None,
        verbose: bool = False,
        record_trajectory: bool = False,
        name: str = "mission",
    ):
        self.scenario = scenario
        self.ctx = MissionContext(name, verbose, hooks)
        self.streams = SeedStreams(scenario.runtime.seed)
        self.record_trajectory = record_trajectory

        rt = scenario.runtime
        ctrl = scenario.controller
        planner = scenario.planner
        mission = scenario.mission

        ws = Workspace.from_spec(scenario.workspace)
        target = None
        if mission.mode == MissionMode.TARGET_FOLLOWING:
            schedule = np.asarray(mission.target.schedule, dtype=float)
            target = SphereObstacle(schedule[0, 1:], mission.target.radius, schedule)
            ws = Workspace(ws.bounds_min, ws.bounds_max, [*ws.obstacles, target], ws.plane_z)
        self.ws = ws
        self.dynamic = bool(ws.dynamic_obstacles)

        self.n = scenario.agents.count
        self.r_agent = scenario.agents.r_agent
        self.r_plan = self.r_agent + rt.planning_margin
        self.dt = 1.0 / ctrl.ctrl_hz
        self.dt_step = planner.d_travel / rt.speed
        self.ticks_per_replan = max(1, int(round(ctrl.ctrl_hz / rt.replan_hz)))
        self.period = self.ticks_per_replan * self.dt
        self.deadline_ms = rt.deadline_fraction * self.period * 1000.0
        fastest = max((o.speed for o in ws.dynamic_obstacles), default=0.0)
        self.dynamic_margin = rt.obstacle_margin + fastest * self.period
        self.arrival_radius = planner.r_target + rt.arrival_tolerance
        self.total_ticks = int(np.ceil(mission.duration_s * ctrl.ctrl_hz - 1e-9))

        self.gains = derive_gains(ctrl.q_pos, ctrl.q_vel, ctrl.r_acc, self.dt, ctrl.k_ff)
        self.disturbance = None
        if ctrl.disturbance_sigma > 0:
            self.disturbance = Disturbance(ctrl.disturbance_sigma, self.streams.disturbance, ctrl.disturbance_clip, ws.planar)

        self.builder = RoadmapBuilder(ws, self.r_plan, scenario.roadmap)
        self._roadmaps: dict[bytes, Roadmap] = {}

        separation = 2.0 * self.r_plan + planner.r_target
        snapshot0 = ws.frozen(0.0, self.dynamic_margin)
        if scenario.agents.starts is not None:
            starts = ws.project_plane(np.asarray(scenario.agents.starts, dtype=float))
        else:
            starts = sample_positions(snapshot0, self.n, self.r_plan, self.streams.get("starts"), separation)
        self.starts = starts
        self.states = [RobotState.at_rest(p) for p in starts]
        self.goals = GoalStream(mission, ws, self.n, self.r_plan, self.streams.mission, separation, target)

        self.plans: SnapshotBox[PlanSnapshot] = SnapshotBox()
        self.world: SnapshotBox[WorldSnapshot] = SnapshotBox()

        # Control-side state.
        self.tick = 0
        self.finished = False
        self.completed = False
        self.abort_reason: Optional[str] = None
        self.tasks: list[TaskRecord] = []
        self._open: list[Optional[TaskRecord]] = [None] * self.n
        self.collisions: list[CollisionEvent] = []
        self.errors: list[list[float]] = []
        self.trajectory: list[tuple] = []
        self._deviation = 0.0

        # Replan bookkeeping, written only by `commit`.
        self.replans: list[ReplanRecord] = []
        self.misses = 0
        self._last_replan_tick: Optional[int] = None
        self._planned_goal_version = -1
        self._wall0 = time.perf_counter()

    # ---------- Clock / snapshots ---------- #
    @property
    def t(self) -> float:
        return self.tick * self.dt

    def positions(self) -> np.ndarray:
        return np.array([s.p for s in self.states])

    def publish_world(self) -> WorldSnapshot:
        world = WorldSnapshot(
            t=self.t,
            tick=self.tick,
            positions=self.positions(),
            goals=self.goals.goals.copy(),
            goal_version=self.goals.version,
            max_deviation=self._deviation,
        )
        self.world.publish(world)
        return world

    def start(self) -> None:
        """Assign the first goals and plan before the first control tick."""
        snapshot = self.ws.frozen(0.0, self.dynamic_margin)
        assigned = self.goals.initial(self.positions(), 0.0, snapshot)
        if self.goals.mode != MissionMode.TARGET_FOLLOWING:
            for i in assigned:
                self._assign(i, 0.0)
        self.replan(self.publish_world(), "initial")

    # ---------- Replanning ---------- #
    def due(self, world: WorldSnapshot) -> Optional[str]:
        """The trigger for a replan at this world snapshot, or None."""
        if self._last_replan_tick is None:
            return "initial"
        if world.tick - self._last_replan_tick < self.ticks_per_replan:
            return None
        rt = self.scenario.runtime
        if world.goal_version != self._planned_goal_version:
            return "goal"
        if rt.deviation_trigger is not None and world.max_deviation > rt.deviation_trigger:
            return "deviation"
        # Formation slots move with the target, so target following always replans on period.
        if rt.periodic or self.goals.mode == MissionMode.TARGET_FOLLOWING:
            return "periodic"
        if self.misses:
            return "retry"
        return None

    def _roadmaps_for(self, targets: np.ndarray, t: float) -> list[Roadmap]:
        if self.dynamic:
            return [self.builder.build(g, t, self.dynamic_margin) for g in targets]
        out = []
        for g in targets:
            key = np.round(g, 12).tobytes()
            if key not in self._roadmaps:
                self._roadmaps[key] = self.builder.build(g, t)
            out.append(self._roadmaps[key])
        return out

    def compute(self, world: WorldSnapshot, trigger: str, index: int) -> ReplanOutcome:
        """
        Build a query from `world` and solve it, without touching control-side state.

        Reads only the world snapshot, the latest plan snapshot and planner-owned
        caches, so it may run on a worker thread while the control loop ticks.
        `commit` applies the outcome.
        """
        scenario = self.scenario
        rt = scenario.runtime
        params = scenario.planner
        t = world.t
        wall0 = time.perf_counter()

        def record(**fields) -> ReplanRecord:
            return ReplanRecord(
                t=_r6(t),
                trigger=trigger,
                planning_ms=(time.perf_counter() - wall0) * 1000.0,
                **fields,
            )

        ws_t = self.ws.frozen(t, self.dynamic_margin) if self.dynamic else self.ws
        if self.goals.mode == MissionMode.TARGET_FOLLOWING:
            targets = self.goals.formation(t, world.positions)
        else:
            targets = world.goals.copy()

        prev = self.plans.latest()
        hit = try_reuse(world.positions, prev.plan, scenario.reuse_delta, ws_t, t) if prev else None
        repaired = False
        seed = None
        if hit is not None:
            starts, seed = hit.seed[0], hit.seed
            anchor = prev.anchor + hit.k * self.dt_step
        else:
            try:
                starts, repaired = repair_query(
                    world.positions,
                    ws_t,
                    self.r_plan,
                    rt.sigma_repair,
                    self.streams.fresh("repair", index),
                    params.d_travel,
                    rt.repair_rounds,
                    t,
                )
            except RepairFailed as e:
                return ReplanOutcome(record(version=self.plans.version, miss=True), error=e, fatal=True)
            anchor = t

        blocked = ~ws_t.points_free(targets, self.r_plan)
        if blocked.any():
            # Wait in place until the goal clears.
            targets[blocked] = starts[blocked]
            self.ctx._log(f"[GOAL] t={t:.2f}s goals of agents {np.flatnonzero(blocked).tolist()} blocked; holding", LogLevel.WARNING)

        query = ProblemQuery(
            starts=starts,
            targets=targets,
            r_agent=self.r_plan,
            r_target=params.r_target,
            d_travel=params.d_travel,
            t=t,
            deadline_ms=self.deadline_ms,
            node_budget=params.node_budget,
            seed=scenario.runtime.seed,
            seed_steps=seed,
        )
        reuse = {"reuse_hit": hit is not None, "reuse_k": None if hit is None else hit.k, "repaired": repaired}
        try:
            rms = self._roadmaps_for(targets, t)
            plan = solve(
                query,
                ws_t,
                params,
                rms=rms,
                roadmap_params=scenario.roadmap,
                rng=self.streams.fresh("planner", index),
            )
        except _PLANNER_MISSES as e:
            rec = record(version=self.plans.version, nodes=getattr(e, "nodes_expanded", 0), miss=True, **reuse)
            return ReplanOutcome(rec, error=e)

        references = [ReferenceTrajectory(plan.path(i), self.dt_step, anchor) for i in range(self.n)]
        version = self.plans.version + 1
        rec = record(
            version=version,
            flowtime=plan.flowtime,
            nodes=plan.stats.nodes_expanded if plan.stats else 0,
            **reuse,
        )
        return ReplanOutcome(rec, PlanSnapshot(version, plan, anchor, tuple(references)))

    def commit(self, world: WorldSnapshot, outcome: ReplanOutcome) -> ReplanRecord:
        """
        Apply a replan outcome on the control side: publish the plan and keep the books.

        Raises:
            MissionAborted: On a failed repair or after too many consecutive misses.
        """
        self._last_replan_tick = world.tick
        self._planned_goal_version = world.goal_version
        record = outcome.record
        self.replans.append(record)
        self.ctx.replanned(record)
        if outcome.snapshot is not None:
            self.misses = 0
            self.plans.publish(outcome.snapshot)
            return record
        if outcome.fatal:
            self._abort(f"repair failed at t={world.t:.2f}s: {outcome.error.message}", outcome.error)
        self.misses += 1
        if self.misses >= self.scenario.runtime.max_misses:
            self._abort(f"planner missed {self.misses} consecutive replans (last at t={world.t:.2f}s)", outcome.error)
        return record

    def replan(self, world: WorldSnapshot, trigger: str) -> ReplanRecord:
        """Plan from `world` and apply the outcome in one call (lockstep mode)."""
        return self.commit(world, self.compute(world, trigger, len(self.replans)))

    def _abort(self, reason: str, error: Exception):
        self.abort_reason = reason
        self.finished = True
        raise MissionAborted(f"Mission aborted: {reason}", metrics=self.metrics(), original_error=error)

    # ---------- Control ---------- #
    def _reference(self, snap: Optional[PlanSnapshot], i: int, t: float) -> TrajectorySample:
        if snap is None:
            zero = np.zeros(3)
            return TrajectorySample(t, self.starts[i], zero, zero)
        return snap.references[i].sample(t)

    def control_tick(self) -> None:
        """Advance every robot by one control period, then run the online checks."""
        ctrl = self.scenario.controller
        t = self.t
        snap = self.plans.latest()
        errors = []
        for i, state in enumerate(self.states):
            ref = self._reference(snap, i, t)
            err = float(np.linalg.norm(state.p - ref.p))
            errors.append(_r6(err))
            if self.record_trajectory:
                self.trajectory.append((self.tick, i, *map(_r6, state.p), *map(_r6, ref.p), _r6(err)))
            u = control_step(state, ref, self.gains, ctrl.a_max)
            self.states[i] = step_plant(state, u, self.dt, self.disturbance)
        self.errors.append(errors)
        self._deviation = max(errors)
        self.tick += 1

        self._check_collisions()
        self._update_goals(snap)
        if self.tick >= self.total_ticks and not self.finished:
            self._close(timed_out=True)

    def overdue_tasks(self) -> list[TaskRecord]:
        """Assigned tasks still open after the liveness window."""
        limit = self.scenario.runtime.liveness_s
        return [task for task in self.tasks if task.t_arrived is None and self.t - task.t_assigned > limit + 1e-9]

    def _close(self, timed_out: bool) -> None:
        """Finish the mission and decide whether it completed."""
        self.finished = True
        self.completed = False
        if self.collisions:
            self.abort_reason = f"{len(self.collisions)} collision event(s) recorded"
        elif timed_out and self.goals.mode == MissionMode.ONESHOT:
            self.abort_reason = "mission time elapsed before every goal was reached"
        elif self.overdue_tasks():
            late = sorted({task.agent for task in self.overdue_tasks()})
            self.abort_reason = f"goals of agents {late} open for more than {self.scenario.runtime.liveness_s}s"
        else:
            self.completed = True

    def _check_collisions(self) -> None:
        t = self.t
        tol = self.scenario.runtime.collision_tolerance
        P = self.positions()
        found: list[CollisionEvent] = []
        if self.n > 1:
            d = pdist(P)
            ii, jj = np.triu_indices(self.n, 1)
            for k in np.flatnonzero(d < 2.0 * self.r_agent - tol):
                found.append(CollisionEvent(t=_r6(t), tick=self.tick, kind="agent", agents=[int(ii[k]), int(jj[k])], distance=_r6(d[k])))
        if self.ws.obstacles:
            clear = self.ws.point_distances(P, t)
            for i in np.flatnonzero(clear < self.r_agent - tol):
                found.append(CollisionEvent(t=_r6(t), tick=self.tick, kind="obstacle", agents=[int(i)], distance=_r6(clear[i])))
        for event in found:
            self.collisions.append(event)
            self.ctx.collided(event)

    def _assign(self, i: int, t: float) -> None:
        goal = self.goals.goals[i]
        task = TaskRecord(
            agent=i,
            goal=[_r6(x) for x in goal],
            t_assigned=_r6(t),
            distance=_r6(np.linalg.norm(self.states[i].p - goal)),
        )
        self.tasks.append(task)
        self._open[i] = task
        self.ctx.goal_assigned(i, goal, t)

    def _update_goals(self, snap: Optional[PlanSnapshot]) -> None:
        if self.goals.mode == MissionMode.TARGET_FOLLOWING:
            return
        t = self.t
        dist = np.linalg.norm(self.positions() - self.goals.goals, axis=1)
        for i in np.flatnonzero(dist <= self.arrival_radius):
            task = self._open[i]
            if task is not None and task.t_arrived is None:
                task.t_arrived = _r6(t)
                self.ctx.event(t, "arrived", int(i))

        arrived = np.array([task is not None and task.t_arrived is not None for task in self._open])
        if self.goals.mode == MissionMode.ONESHOT:
            if arrived.all() and (snap is None or t >= snap.t_end):
                self._close(timed_out=False)
            return

        snapshot = self.ws.frozen(t, self.dynamic_margin) if self.dynamic else self.ws
        for i in self.goals.update(arrived, t, snapshot):
            old = self._open[i]
            if old is not None:
                old.duration = _r6(t - old.t_assigned)
            self._assign(i, t)

    # ---------- Loop ---------- #
    def step(self) -> None:
        """One lockstep iteration: maybe replan, then one control tick."""
        world = self.publish_world()
        trigger = self.due(world)
        if trigger is not None:
            self.replan(world, trigger)
        self.control_tick()

    def run(self) -> MissionResult:
        self.start()
        while not self.finished:
            self.step()
        return self.result()

    # ---------- Metrics ---------- #
    def metrics(self) -> MetricsLog:
        for task in self.tasks:
            if task.duration is None and task.t_arrived is not None:
                task.duration = _r6(task.t_arrived - task.t_assigned)

        errors = np.asarray(self.errors, dtype=float).reshape(-1, self.n)
        tracking = []
        if len(errors):
            for i in range(self.n):
                col = errors[:, i]
                tracking.append(
                    TrackingSummary(
                        agent=i,
                        max_error=_r6(col.max()),
                        mean_error=_r6(col.mean()),
                        p95_error=_r6(np.percentile(col, 95)),
                    )
                )

        later = [r for r in self.replans[1:] if not r.miss]
        hits = [r.planning_ms for r in self.replans if r.reuse_hit and not r.miss]
        cold = [r.planning_ms for r in self.replans if not r.reuse_hit and not r.miss]
        done = [task for task in self.tasks if task.duration is not None]
        rho = None
        if len(done) >= 3:
            value = spearmanr([task.distance for task in done], [task.duration for task in done]).statistic
            rho = None if np.isnan(value) else _r6(value)

        summary = MissionSummary(
            ticks=self.tick,
            sim_time=_r6(self.t),
            replans=len(self.replans),
            reuse_hit_rate=_r6(sum(r.reuse_hit for r in later) / len(later)) if later else None,
            mean_planning_ms_hit=float(np.mean(hits)) if hits else None,
            mean_planning_ms_cold=float(np.mean(cold)) if cold else None,
            tasks_completed=sum(task.t_arrived is not None for task in self.tasks),
            task_spearman=rho,
            max_tracking_error=_r6(errors.max()) if errors.size else 0.0,
            collisions=len(self.collisions),
        )
        return MetricsLog(
            seed=self.scenario.runtime.seed,
            mode=self.goals.mode.value,
            completed=self.completed,
            abort_reason=self.abort_reason,
            replans=self.replans,
            tasks=self.tasks,
            collisions=self.collisions,
            tracking=tracking,
            tracking_error=self.errors,
            summary=summary,
            wall_s=time.perf_counter() - self._wall0,
        )

    def result(self) -> MissionResult:
        return MissionResult(self.metrics(), self.trajectory, self.ctx.events)


def run_mission(
    scenario: Scenario,
    hooks: Optional[MissionHooks] = None,
    verbose: bool = False,
    record_trajectory: bool = False,
) -> MissionResult:
    """
    Simulate a mission on one deterministic clock.

    Raises:
        MissionAborted: Carries the metrics gathered up to the abort.
    """
    runner = MissionRunner(scenario, hooks=hooks, verbose=verbose, record_trajectory=record_trajectory)
    try:
        return runner.run()
    except MissionAborted:
        raise
    except LoopflowError as e:
        raise MissionAborted(f"Mission aborted: {e.message}", metrics=runner.metrics(), original_error=e) from e


def write_trajectory_csv(path, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_COLUMNS)
        writer.writerows(rows)


def write_events_csv(path, events) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=EVENT_COLUMNS)
        writer.writeheader()
        writer.writerows(events)


def scenario_query(scenario: Scenario) -> tuple[ProblemQuery, Workspace]:
    """The t = 0 planning query of a scenario (its starts, first goals and r_agent) and its workspace."""
    runner = MissionRunner(scenario)
    runner.goals.initial(runner.positions(), 0.0, runner.ws.frozen(0.0, runner.dynamic_margin))
    params = scenario.planner
    query = ProblemQuery(
        starts=runner.starts,
        targets=runner.goals.goals,
        r_agent=scenario.agents.r_agent,
        r_target=params.r_target,
        d_travel=params.d_travel,
        t=0.0,
        deadline_ms=params.deadline_ms,
        node_budget=params.node_budget,
        seed=scenario.runtime.seed,
    )
    return query, runner.ws
