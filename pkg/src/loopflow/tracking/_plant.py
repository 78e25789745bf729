from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np


def _wrap(yaw: float) -> float:
    wrapped = (yaw + np.pi) % (2.0 * np.pi) - np.pi
    return np.pi if wrapped == -np.pi else float(wrapped)


@dataclass(frozen=True)
class RobotState:
    """Flat state of one simulated robot; yaw stays 0 here."""

    p: np.ndarray
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    a: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw: float = 0.0

    def __post_init__(self):
        for name in ("p", "v", "a"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (3,) or not np.all(np.isfinite(arr)):
                raise ValueError(f"RobotState.{name} must be 3 finite values, got {arr}")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "yaw", _wrap(float(self.yaw)))

    @classmethod
    def at_rest(cls, p) -> "RobotState":
        return cls(np.asarray(p, dtype=float))

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.p, self.v, self.a, [self.yaw]])


class Disturbance:
    """Zero-mean Gaussian acceleration noise truncated at +-clip standard deviations."""

    def __init__(self, sigma: float, rng: np.random.Generator, clip: float = 3.0, planar: bool = False):
        self.sigma = float(sigma)
        self.clip = float(clip)
        self.rng = rng
        self.planar = planar

    def sample(self) -> np.ndarray:
        if self.sigma <= 0.0:
            return np.zeros(3)
        w = np.clip(self.rng.normal(0.0, self.sigma, 3), -self.clip * self.sigma, self.clip * self.sigma)
        if self.planar:
            w[2] = 0.0
        return w


def step_plant(state: RobotState, u, dt: float, disturbance: Optional[Disturbance] = None) -> RobotState:
    """Exact double-integrator update under constant acceleration u (+ optional disturbance) over dt."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    acc = np.asarray(u, dtype=float)
    if disturbance is not None:
        acc = acc + disturbance.sample()
    p = state.p + state.v * dt + 0.5 * acc * dt * dt
    v = state.v + acc * dt
    return replace(state, p=p, v=v, a=acc)
