from typing import Optional

import numpy as np

from loopflow._utils.exception import LoopflowError
from loopflow.schemas import BoxRegion, DiskRegion, MissionMode, MissionSpec
from loopflow.workspace import Obstacle, Workspace


class GoalSamplingFailed(LoopflowError):
    """Raised when no free, separated goal can be drawn from the goal region."""
    def __init__(self, message: str):
        super().__init__(message, error_code="GOAL_SAMPLING_FAILED")


def sample_in_region(region, ws: Workspace, rng: np.random.Generator) -> np.ndarray:
    """One uniform draw from a disk or box region (the workspace bounds when region is None)."""
    if isinstance(region, DiskRegion):
        rho = region.radius * np.sqrt(rng.uniform())
        theta = rng.uniform(0.0, 2.0 * np.pi)
        c = np.asarray(region.center, dtype=float)
        p = c + np.array([rho * np.cos(theta), rho * np.sin(theta), 0.0])
    elif isinstance(region, BoxRegion):
        p = rng.uniform(region.lo, region.hi)
    else:
        p = rng.uniform(ws.bounds_min, ws.bounds_max)
    return ws.project_plane(p)


def sample_positions(
    ws: Workspace,
    count: int,
    r: float,
    rng: np.random.Generator,
    separation: float,
    region=None,
    avoid: Optional[np.ndarray] = None,
    t: float = 0.0,
    tries: int = 2000,
) -> np.ndarray:
    """
    Draw `count` free positions, pairwise at least `separation` apart and
    that far from every row of `avoid`.

    Raises:
        GoalSamplingFailed: If a position cannot be placed within `tries` draws.
    """
    chosen: list[np.ndarray] = []
    others = np.empty((0, 3)) if avoid is None else np.asarray(avoid, dtype=float).reshape(-1, 3)
    for i in range(count):
        for _ in range(tries):
            p = sample_in_region(region, ws, rng)
            if not ws.point_free(p, r, t):
                continue
            taken = np.vstack([others, *chosen]) if chosen else others
            if len(taken) and np.min(np.linalg.norm(taken - p, axis=1)) < separation:
                continue
            chosen.append(p)
            break
        else:
            raise GoalSamplingFailed(
                f"Could not place position {i + 1} of {count} (r={r:.3f}, separation={separation:.3f}) "
                f"after {tries} draws."
            )
    return np.array(chosen).reshape(count, 3)


def assign_greedy(slots: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Nearest-pair greedy matching; returns the slot index per robot."""
    cost = np.linalg.norm(positions[:, None, :] - slots[None, :, :], axis=2)
    n = len(positions)
    out = -np.ones(n, dtype=int)
    for _ in range(n):
        i, j = np.unravel_index(int(np.argmin(cost)), cost.shape)
        out[i] = j
        cost[i, :] = np.inf
        cost[:, j] = np.inf
    return out


class GoalStream:
    """
    Goal bookkeeping for one mission.

    oneshot:            goals fixed at the start.
    sync:               every goal is redrawn once all robots have arrived.
    async:              an arrived robot gets a new goal immediately.
    target_following:   goals are formation slots around a moving target;
                        the planner recomputes them from its world snapshot
                        with `formation`, which reads no mutable state.

    `version` increases whenever any goal changes. Only the control side
    calls `initial` and `update`.
    """

    def __init__(
        self,
        spec: MissionSpec,
        ws: Workspace,
        n: int,
        r: float,
        rng: np.random.Generator,
        separation: float,
        target: Optional[Obstacle] = None,
    ):
        self.spec = spec
        self.mode = MissionMode(spec.mode)
        self.ws = ws
        self.n = n
        self.r = r
        self.rng = rng
        self.separation = separation
        self.target = target
        self.goals = np.zeros((n, 3))
        self.version = 0

    # ---------- Target following ---------- #
    def target_position(self, t: float) -> np.ndarray:
        if self.target is None:
            raise LoopflowError("This mission has no target.", error_code="NO_TARGET")
        return self.ws.project_plane(self.target.position(t))

    def formation(self, t: float, positions: np.ndarray) -> np.ndarray:
        """Circle slots around the target at time t, matched greedily to the robots."""
        center = self.target_position(t)
        angles = 2.0 * np.pi * np.arange(self.n) / self.n
        radius = self.spec.target.formation_radius
        slots = center + radius * np.stack([np.cos(angles), np.sin(angles), np.zeros(self.n)], axis=1)
        slots = self.ws.project_plane(slots)
        return slots[assign_greedy(slots, positions)]

    # ---------- Assignment ---------- #
    def _draw(self, count: int, t: float, ws_t: Workspace, avoid=None) -> np.ndarray:
        return sample_positions(ws_t, count, self.r, self.rng, self.separation, self.spec.region, avoid, t)

    def initial(self, positions: np.ndarray, t: float, ws_t: Workspace) -> list[int]:
        if self.mode == MissionMode.TARGET_FOLLOWING:
            self.goals = self.formation(t, positions)
        elif self.spec.goals is not None:
            self.goals = self.ws.project_plane(np.asarray(self.spec.goals, dtype=float))
        else:
            self.goals = self._draw(self.n, t, ws_t)
        self.version += 1
        return list(range(self.n))

    def update(self, arrived: np.ndarray, t: float, ws_t: Workspace) -> list[int]:
        """New assignments after arrivals; returns the agents whose goals changed."""
        if self.mode == MissionMode.SYNC and arrived.all():
            self.goals = self._draw(self.n, t, ws_t)
            self.version += 1
            return list(range(self.n))
        if self.mode == MissionMode.ASYNC and arrived.any():
            changed = []
            goals = self.goals.copy()
            for i in np.flatnonzero(arrived):
                others = np.delete(goals, i, axis=0)
                goals[i] = self._draw(1, t, ws_t, avoid=others)[0]
                changed.append(int(i))
            self.goals = goals
            self.version += 1
            return changed
        return []
