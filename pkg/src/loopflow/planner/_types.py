from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from loopflow._utils.validation import as_points

# Positions closer than this count as "did not move".
MOVE_TOL = 1e-12


class Configuration:
    """Joint position of all agents at one discrete step."""

    __slots__ = ("positions",)

    def __init__(self, positions):
        arr = as_points(positions, "configuration")
        arr = np.array(arr, dtype=float, copy=True)
        arr.setflags(write=False)
        self.positions = arr

    def __len__(self) -> int:
        return len(self.positions)

    def __getitem__(self, i) -> np.ndarray:
        return self.positions[i]

    def max_deviation(self, other) -> float:
        """max over agents of the Euclidean distance to `other`."""
        other = other.positions if isinstance(other, Configuration) else np.asarray(other, dtype=float)
        return float(np.max(np.linalg.norm(self.positions - other, axis=1)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.positions.shape == other.positions.shape and bool(np.all(self.positions == other.positions))

    def __repr__(self) -> str:
        return f"Configuration(n={len(self)})"


@dataclass
class ProblemQuery:
    """
    One multi-agent query: current positions, targets and step geometry.

    `fixed_paths` (shape (T_f + 1, m, 3)) are agents whose motion is given;
    they act as moving obstacles and hold their last position afterwards.
    `seed_steps` is a previously found step sequence starting at `starts`.
    """

    starts: np.ndarray
    targets: np.ndarray
    r_agent: float
    r_target: float
    d_travel: float
    t: float = 0.0
    deadline_ms: Optional[float] = None
    node_budget: Optional[int] = None
    seed: int = 0
    seed_steps: Optional[np.ndarray] = None
    fixed_paths: Optional[np.ndarray] = None

    def __post_init__(self):
        self.starts = np.array(as_points(self.starts, "starts"), dtype=float)
        self.targets = np.array(as_points(self.targets, "targets"), dtype=float)
        if self.starts.shape != self.targets.shape:
            raise ValueError(f"{len(self.starts)} starts but {len(self.targets)} targets")
        if len(self.starts) < 1:
            raise ValueError("a query needs at least one agent")
        if self.d_travel <= 0 or self.r_target <= 0 or self.r_agent <= 0:
            raise ValueError("d_travel, r_target and r_agent must be positive")
        if self.fixed_paths is not None:
            self.fixed_paths = np.asarray(self.fixed_paths, dtype=float).reshape(len(self.fixed_paths), -1, 3)

    @property
    def n(self) -> int:
        return len(self.starts)

    @property
    def fixed_horizon(self) -> int:
        """Last step at which a fixed agent moves (0 when there are none)."""
        if self.fixed_paths is None or self.fixed_paths.shape[1] == 0:
            return 0
        moves = np.any(np.linalg.norm(np.diff(self.fixed_paths, axis=0), axis=2) > MOVE_TOL, axis=1)
        idx = np.flatnonzero(moves)
        return int(idx[-1] + 1) if idx.size else 0

    def fixed_at(self, k: int) -> Optional[np.ndarray]:
        if self.fixed_paths is None:
            return None
        return self.fixed_paths[min(k, len(self.fixed_paths) - 1)]

    def at_goal(self, positions: np.ndarray) -> np.ndarray:
        return np.linalg.norm(positions - self.targets, axis=1) <= self.r_target

    def straight_steps(self) -> np.ndarray:
        """Per-agent start-to-target distance in steps, floored at one step."""
        dist = np.linalg.norm(self.starts - self.targets, axis=1) / self.d_travel
        return np.maximum(dist, 1.0)


def settled_indices(steps: np.ndarray) -> np.ndarray:
    """Per agent, the last step index reached by a move (0 if it never moves)."""
    if len(steps) <= 1:
        return np.zeros(steps.shape[1], dtype=int)
    moved = np.linalg.norm(np.diff(steps, axis=0), axis=2) > MOVE_TOL
    last = np.where(moved.any(axis=0), len(moved) - np.argmax(moved[::-1], axis=0), 0)
    return last.astype(int)


class Plan:
    """
    Step sequence [Q0 ... QT] for all agents plus its cost.

    `steps` is a read-only (T + 1, n, 3) array. Flowtime is the sum over
    agents of the settled index; the normalized cost divides it by the
    per-agent start-to-target distance in steps.
    """

    def __init__(self, steps, query: ProblemQuery, feasible: bool = False, stats: Optional["SolveStats"] = None):
        arr = np.array(steps, dtype=float, copy=True)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"plan steps must have shape (T+1, n, 3), got {arr.shape}")
        arr.setflags(write=False)
        self.steps = arr
        self.query = query
        self.settled = settled_indices(arr)
        self.flowtime = int(self.settled.sum())
        self.feasible = feasible
        self.stats = stats

    @property
    def T(self) -> int:
        return len(self.steps) - 1

    @property
    def n(self) -> int:
        return self.steps.shape[1]

    @property
    def makespan(self) -> int:
        return int(self.settled.max(initial=0))

    @property
    def normalized_cost(self) -> float:
        if self.flowtime == 0:
            return 0.0
        return float(self.flowtime / self.query.straight_steps().sum())

    def path(self, i: int) -> np.ndarray:
        return self.steps[:, i, :]

    def configuration(self, k: int) -> Configuration:
        return Configuration(self.steps[k])

    def suffix(self, k: int) -> np.ndarray:
        return self.steps[k:]

    def trimmed(self) -> "Plan":
        """Drop trailing steps in which nobody moves."""
        T = max(self.makespan, 0)
        return Plan(self.steps[: T + 1], self.query, self.feasible, self.stats)

    def to_document(self):
        from loopflow.schemas import PlanDocument

        return PlanDocument(
            steps=self.steps.tolist(),
            flowtime=self.flowtime,
            normalized_cost=self.normalized_cost,
            feasible=self.feasible,
        )

    def __repr__(self) -> str:
        return f"Plan(n={self.n}, T={self.T}, flowtime={self.flowtime}, feasible={self.feasible})"


@dataclass
class SolveStats:
    nodes_expanded: int = 0
    max_depth: int = 0
    t_first_ms: Optional[float] = None
    expansions_first: Optional[int] = None
    trace: list = field(default_factory=list)
    reused: bool = False

    def record(self, elapsed_ms: float, expansions: int, flowtime: int) -> None:
        self.trace.append((float(elapsed_ms), int(expansions), int(flowtime)))
