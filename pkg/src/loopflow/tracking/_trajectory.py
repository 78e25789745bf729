from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    p: np.ndarray
    v: np.ndarray
    a: np.ndarray


class ReferenceTrajectory:
    """
    Piecewise-quadratic reference through a waypoint path sampled every `dt_step`.

    Segment k (t in [k, k+1] * dt_step after `t_anchor`) follows the quadratic
    through waypoints {k-1, k, k+1}; the first segment uses {0, 1, 2} and a
    two-point path is linear. Past the last waypoint the sample holds it with
    zero velocity and acceleration. Coefficients are built once; sampling is O(1).
    """

    def __init__(self, path, dt_step: float, t_anchor: float = 0.0):
        path = np.atleast_2d(np.asarray(path, dtype=float))
        if len(path) == 0:
            raise ValueError("reference path must not be empty")
        if dt_step <= 0:
            raise ValueError("dt_step must be positive")
        self.path = path
        self.dt_step = float(dt_step)
        self.t_anchor = float(t_anchor)
        T = len(path) - 1
        self.T = T
        if T >= 2:
            centers = np.clip(np.arange(T), 1, T - 1)
            prev, mid, nxt = path[centers - 1], path[centers], path[centers + 1]
            self._center_t = centers * self.dt_step
            self._p = mid
            self._v = (nxt - prev) / (2.0 * self.dt_step)
            self._a = (nxt - 2.0 * mid + prev) / self.dt_step**2
        elif T == 1:
            self._center_t = np.zeros(1)
            self._p = path[:1]
            self._v = (path[1:] - path[:1]) / self.dt_step
            self._a = np.zeros((1, path.shape[1]))

    @property
    def duration(self) -> float:
        return self.T * self.dt_step

    @property
    def t_end(self) -> float:
        return self.t_anchor + self.duration

    @property
    def final(self) -> np.ndarray:
        return self.path[-1]

    def sample(self, t: float) -> TrajectorySample:
        local = max(float(t) - self.t_anchor, 0.0)
        zero = np.zeros(self.path.shape[1])
        if self.T == 0 or local >= self.duration:
            return TrajectorySample(float(t), self.path[-1].copy(), zero, zero.copy())
        k = min(int(local // self.dt_step), self.T - 1)
        tau = local - self._center_t[k]
        a = self._a[k]
        v = self._v[k] + a * tau
        p = self._p[k] + self._v[k] * tau + 0.5 * a * tau * tau
        return TrajectorySample(float(t), p, v, a.copy())


def interpolate(path, dt_step: float, t: float) -> TrajectorySample:
    """Sample the piecewise-quadratic reference of `path` at time t (anchored at 0)."""
    return ReferenceTrajectory(path, dt_step).sample(t)
