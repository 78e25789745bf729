"""
Obstacle primitives.

Every primitive answers two families of queries:

* exact scalar distances (`distance`, `segment_distance`) written per shape in
  closed form, used by the independent plan checker;
* a vectorized projection (`project`) that the batch collision path of the
  workspace turns into point and swept-segment distances for the search.

Distances are to the raw shape surface (zero inside). `pad` is an extra
inflation radius added by `Workspace.frozen` for moving obstacles.
"""

from abc import ABC, abstractmethod
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar


def _point_segment_param(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    d = b - a
    dd = float(d @ d)
    if dd <= 0.0:
        return 0.0
    return float(np.clip((p - a) @ d / dd, 0.0, 1.0))


class Obstacle(ABC):
    """Abstract base class for obstacle shapes with an optional motion schedule."""

    kind: str = "obstacle"

    def __init__(self, schedule: Optional[np.ndarray] = None, pad: float = 0.0):
        if schedule is not None:
            schedule = np.asarray(schedule, dtype=float).reshape(-1, 4)
            if np.any(np.diff(schedule[:, 0]) <= 0):
                raise ValueError("schedule times must be strictly increasing")
        self.schedule = schedule
        self.pad = float(pad)

    @property
    def dynamic(self) -> bool:
        return self.schedule is not None

    @property
    def speed(self) -> float:
        """Fastest scheduled translation speed (0 for static obstacles)."""
        if self.schedule is None or len(self.schedule) < 2:
            return 0.0
        moves = np.linalg.norm(np.diff(self.schedule[:, 1:], axis=0), axis=1)
        return float(np.max(moves / np.diff(self.schedule[:, 0])))

    def position(self, t: float) -> np.ndarray:
        """Center at time t: the schedule interpolated and clamped at its ends."""
        if self.schedule is None:
            return self.reference_point()
        times = self.schedule[:, 0]
        return np.array([np.interp(t, times, self.schedule[:, k]) for k in (1, 2, 3)])

    def offset(self, t: float) -> np.ndarray:
        """Translation that puts the declared shape on its scheduled center."""
        if self.schedule is None:
            return np.zeros(3)
        return self.position(t) - self.reference_point()

    def at(self, t: float, margin: float = 0.0) -> "Obstacle":
        """A static copy frozen at time t, inflated by margin."""
        return self._translated(self.offset(t), self.pad + margin)

    @abstractmethod
    def reference_point(self) -> np.ndarray:
        """The point a schedule row places: sphere center, box midpoint, pole axis midpoint."""

    @abstractmethod
    def _translated(self, shift: np.ndarray, pad: float) -> "Obstacle":
        pass

    @abstractmethod
    def distance(self, p: np.ndarray) -> float:
        """Exact distance from point p to the shape surface."""

    @abstractmethod
    def segment_distance(self, a: np.ndarray, b: np.ndarray) -> float:
        """Exact minimum distance from segment ab to the shape."""

    @abstractmethod
    def project(self, points: np.ndarray) -> np.ndarray:
        """Closest shape points for an (m, 3) batch."""

    @abstractmethod
    def aabb(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounds of the shape, without pad."""


class SphereObstacle(Obstacle):
    kind = "sphere"

    def __init__(self, center, radius: float, schedule=None, pad: float = 0.0):
        super().__init__(schedule, pad)
        if radius <= 0:
            raise ValueError("sphere radius must be positive")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)

    def reference_point(self):
        return self.center.copy()

    def _translated(self, shift, pad):
        return SphereObstacle(self.center + shift, self.radius, None, pad)

    def distance(self, p):
        return max(float(np.linalg.norm(np.asarray(p, float) - self.center)) - self.radius, 0.0)

    def segment_distance(self, a, b):
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        s = _point_segment_param(self.center, a, b)
        closest = a + s * (b - a)
        return max(float(np.linalg.norm(closest - self.center)) - self.radius, 0.0)

    def project(self, points):
        diff = points - self.center
        norm = np.linalg.norm(diff, axis=1, keepdims=True)
        scale = np.where(norm > self.radius, self.radius / np.maximum(norm, 1e-300), 1.0)
        return self.center + diff * scale

    def aabb(self):
        return self.center - self.radius, self.center + self.radius


class BoxObstacle(Obstacle):
    kind = "box"

    def __init__(self, lo, hi, schedule=None, pad: float = 0.0):
        super().__init__(schedule, pad)
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if np.any(self.lo >= self.hi):
            raise ValueError("box min must be below max on every axis")

    def reference_point(self):
        return 0.5 * (self.lo + self.hi)

    def _translated(self, shift, pad):
        return BoxObstacle(self.lo + shift, self.hi + shift, None, pad)

    def distance(self, p):
        p = np.asarray(p, float)
        gap = np.maximum(np.maximum(self.lo - p, p - self.hi), 0.0)
        return float(np.linalg.norm(gap))

    def segment_distance(self, a, b):
        # Squared distance is a piecewise quadratic in the segment parameter,
        # with pieces delimited by the six slab-plane crossings.
        a = np.asarray(a, float)
        d = np.asarray(b, float) - a
        cuts = [0.0, 1.0]
        for k in range(3):
            if d[k] != 0.0:
                for plane in (self.lo[k], self.hi[k]):
                    s = (plane - a[k]) / d[k]
                    if 0.0 < s < 1.0:
                        cuts.append(float(s))
        cuts = sorted(cuts)
        best = min(self.distance(a), self.distance(a + d))
        for s0, s1 in zip(cuts, cuts[1:]):
            if s1 - s0 <= 0.0:
                continue
            mid = a + 0.5 * (s0 + s1) * d
            # On this piece each axis is either inside its slab or past one fixed plane.
            qa = 0.0
            qb = 0.0
            for k in range(3):
                if mid[k] < self.lo[k]:
                    off = a[k] - self.lo[k]
                elif mid[k] > self.hi[k]:
                    off = a[k] - self.hi[k]
                else:
                    continue
                qa += d[k] * d[k]
                qb += off * d[k]
            if qa > 0.0:
                s = float(np.clip(-qb / qa, s0, s1))
            else:
                s = s0
            best = min(best, self.distance(a + s * d))
        return best

    def project(self, points):
        return np.clip(points, self.lo, self.hi)

    def aabb(self):
        return self.lo.copy(), self.hi.copy()


class PoleObstacle(Obstacle):
    """Vertical cylinder of given radius over the z range [z0, z1]."""

    kind = "pole"

    def __init__(self, xy, radius: float, z_range, schedule=None, pad: float = 0.0):
        super().__init__(schedule, pad)
        if radius <= 0:
            raise ValueError("pole radius must be positive")
        self.xy = np.asarray(xy, dtype=float)
        self.radius = float(radius)
        self.z0, self.z1 = (float(z) for z in z_range)
        if self.z0 >= self.z1:
            raise ValueError("pole z range must be increasing")

    def reference_point(self):
        return np.array([self.xy[0], self.xy[1], 0.5 * (self.z0 + self.z1)])

    def _translated(self, shift, pad):
        return PoleObstacle(self.xy + shift[:2], self.radius, (self.z0 + shift[2], self.z1 + shift[2]), None, pad)

    def distance(self, p):
        p = np.asarray(p, float)
        dxy = max(float(np.linalg.norm(p[:2] - self.xy)) - self.radius, 0.0)
        dz = max(self.z0 - p[2], p[2] - self.z1, 0.0)
        return float(np.hypot(dxy, dz))

    def _disk_distance(self, a, b) -> float:
        s = _point_segment_param(self.xy, a[:2], b[:2])
        closest = a[:2] + s * (b[:2] - a[:2])
        return max(float(np.linalg.norm(closest - self.xy)) - self.radius, 0.0)

    def segment_distance(self, a, b):
        a = np.asarray(a, float)
        b = np.asarray(b, float)
        d = b - a
        best = min(self.distance(a), self.distance(b))

        # Clip the segment to the z slab; inside it the problem is planar.
        if d[2] != 0.0:
            s_lo, s_hi = sorted(((self.z0 - a[2]) / d[2], (self.z1 - a[2]) / d[2]))
            s_lo, s_hi = max(s_lo, 0.0), min(s_hi, 1.0)
        elif self.z0 <= a[2] <= self.z1:
            s_lo, s_hi = 0.0, 1.0
        else:
            s_lo, s_hi = 1.0, 0.0
        pieces = []
        if s_lo <= s_hi:
            best = min(best, self._disk_distance(a + s_lo * d, a + s_hi * d))
            if s_lo > 0.0:
                pieces.append((0.0, s_lo))
            if s_hi < 1.0:
                pieces.append((s_hi, 1.0))
        else:
            pieces.append((0.0, 1.0))

        # Outside the slab the distance is convex in s; bounded scalar search is exact enough.
        for s0, s1 in pieces:
            if s1 - s0 <= 1e-15:
                continue
            res = minimize_scalar(
                lambda s: self.distance(a + s * d),
                bounds=(s0, s1),
                method="bounded",
                options={"xatol": 1e-12},
            )
            best = min(best, float(res.fun))
        return best

    def project(self, points):
        out = np.array(points, dtype=float, copy=True)
        diff = out[:, :2] - self.xy
        norm = np.linalg.norm(diff, axis=1, keepdims=True)
        scale = np.where(norm > self.radius, self.radius / np.maximum(norm, 1e-300), 1.0)
        out[:, :2] = self.xy + diff * scale
        out[:, 2] = np.clip(out[:, 2], self.z0, self.z1)
        return out

    def aabb(self):
        return (
            np.array([self.xy[0] - self.radius, self.xy[1] - self.radius, self.z0]),
            np.array([self.xy[0] + self.radius, self.xy[1] + self.radius, self.z1]),
        )


def obstacle_from_spec(spec) -> Obstacle:
    """Build an obstacle from a scenario obstacle record."""
    schedule = None if spec.schedule is None else np.asarray(spec.schedule, dtype=float)
    if spec.type == "sphere":
        return SphereObstacle(spec.center, spec.radius, schedule)
    if spec.type == "box":
        return BoxObstacle(spec.lo, spec.hi, schedule)
    if spec.type == "pole":
        return PoleObstacle(spec.xy, spec.radius, spec.z, schedule)
    raise ValueError(f"Unknown obstacle type: {spec.type}")
