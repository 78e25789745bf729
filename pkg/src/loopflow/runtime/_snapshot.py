import threading
from dataclasses import dataclass
from typing import Generic, Optional, Sequence, TypeVar

import numpy as np

from loopflow.planner import Plan
from loopflow.tracking import ReferenceTrajectory

T = TypeVar("T")


@dataclass(frozen=True)
class WorldSnapshot:
    """What the control loop shows the planner: clock, robot positions and goals."""

    t: float
    tick: int
    positions: np.ndarray
    goals: np.ndarray
    goal_version: int
    max_deviation: float = 0.0


@dataclass(frozen=True)
class PlanSnapshot:
    """A published plan with one reference trajectory per robot."""

    version: int
    plan: Plan
    anchor: float
    references: Sequence[ReferenceTrajectory]

    @property
    def t_end(self) -> float:
        return max(ref.t_end for ref in self.references)


class SnapshotBox(Generic[T]):
    """
    Latest-value exchange between the control loop and the planner.

    Values are replaced whole under a lock and never mutated, so a reader
    always sees one complete snapshot. The version counter only grows.
    """

    def __init__(self, initial: Optional[T] = None):
        self._lock = threading.Lock()
        self._value = initial
        self._version = 0 if initial is None else 1

    def publish(self, value: T) -> int:
        with self._lock:
            self._value = value
            self._version += 1
            return self._version

    def latest(self) -> Optional[T]:
        with self._lock:
            return self._value

    def read(self) -> tuple[int, Optional[T]]:
        with self._lock:
            return self._version, self._value

    @property
    def version(self) -> int:
        with self._lock:
            return self._version
