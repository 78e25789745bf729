from typing import Iterable, Optional, Sequence

import numpy as np

from loopflow._utils.validation import as_vector
from ._grid import OccupancyGrid
from ._obstacles import Obstacle, obstacle_from_spec

_BISECTION_STEPS = 60


class Workspace:
    """
    Closed axis-aligned workspace with sphere, box and pole obstacles.

    Contact counts as collision: a sphere of radius r at p is free only when
    its distance to every (padded) obstacle exceeds r. In planar mode all
    positions live at z = plane_z and the z bounds are not enforced.

    Two query paths exist on purpose. `point_free` / `segment_free` evaluate
    the exact per-shape distances one query at a time; `points_free` /
    `segments_free` evaluate whole batches through obstacle projections and
    are what the roadmap builder and the search use.
    """

    def __init__(
        self,
        bounds_min: Sequence[float],
        bounds_max: Sequence[float],
        obstacles: Iterable[Obstacle] = (),
        plane_z: Optional[float] = None,
        check: bool = True,
    ):
        self.bounds_min = as_vector(bounds_min, "bounds_min")
        self.bounds_max = as_vector(bounds_max, "bounds_max")
        if np.any(self.bounds_min >= self.bounds_max):
            raise ValueError("bounds_min must be strictly below bounds_max on every axis")
        self.obstacles: list[Obstacle] = list(obstacles)
        self.plane_z = None if plane_z is None else float(plane_z)
        self._grids: dict[tuple[float, float], OccupancyGrid] = {}
        if check:
            self._check_obstacles()

    def _check_obstacles(self) -> None:
        """Static obstacles must touch W; in planar mode they share one z extent."""
        static = self.static_obstacles
        for k, obs in enumerate(static):
            # The clipped reference point is the closest point of W for all three shapes.
            nearest = np.clip(obs.reference_point(), self.bounds_min, self.bounds_max)
            if obs.distance(nearest) > 0.0:
                raise ValueError(f"static {obs.kind} obstacle #{k} lies entirely outside the workspace bounds")
        if self.planar and len(static) > 1:
            extents = np.array([[obs.aabb()[0][2], obs.aabb()[1][2]] for obs in static])
            if np.any(extents.max(axis=0) - extents.min(axis=0) > 1e-9):
                raise ValueError(f"planar workspaces need equal obstacle z extents, got {extents.tolist()}")

    @classmethod
    def from_spec(cls, spec, plane_z: Optional[float] = None) -> "Workspace":
        obstacles = [obstacle_from_spec(o) for o in spec.obstacles]
        if plane_z is None and spec.planar:
            plane_z = spec.plane_z if spec.plane_z is not None else 0.5 * (spec.bounds_min[2] + spec.bounds_max[2])
        return cls(spec.bounds_min, spec.bounds_max, obstacles, plane_z)

    # ---------- Structure ---------- #
    @property
    def planar(self) -> bool:
        return self.plane_z is not None

    @property
    def static_obstacles(self) -> list[Obstacle]:
        return [o for o in self.obstacles if not o.dynamic]

    @property
    def dynamic_obstacles(self) -> list[Obstacle]:
        return [o for o in self.obstacles if o.dynamic]

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.bounds_max - self.bounds_min))

    def frozen(self, t: float, margin: float = 0.0) -> "Workspace":
        """Snapshot with every moving obstacle fixed at its pose at t and inflated by margin."""
        obstacles = [o.at(t, margin) if o.dynamic else o for o in self.obstacles]
        # Frozen movers may sit anywhere, including outside W.
        return Workspace(self.bounds_min, self.bounds_max, obstacles, self.plane_z, check=False)

    def obstacles_at(self, t: float) -> list[Obstacle]:
        return [o.at(t) if o.dynamic else o for o in self.obstacles]

    def project_plane(self, points) -> np.ndarray:
        pts = np.array(points, dtype=float, copy=True)
        if self.planar:
            pts[..., 2] = self.plane_z
        return pts

    # ---------- Bounds ---------- #
    def _bounds_ok(self, points: np.ndarray, r: float) -> np.ndarray:
        lo = self.bounds_min + r
        hi = self.bounds_max - r
        inside = (points >= lo - 1e-12) & (points <= hi + 1e-12)
        if self.planar:
            inside[:, 2] = True
        return inside.all(axis=1)

    def in_bounds(self, p, r: float = 0.0) -> bool:
        return bool(self._bounds_ok(np.atleast_2d(np.asarray(p, dtype=float)), r)[0])

    # ---------- Exact scalar queries ---------- #
    def point_clearance(self, p, t: float = 0.0) -> float:
        """Distance from p to the nearest padded obstacle surface (inf without obstacles)."""
        p = np.asarray(p, dtype=float)
        best = np.inf
        for o in self.obstacles_at(t):
            best = min(best, o.distance(p) - o.pad)
        return float(best)

    def segment_clearance(self, a, b, t: float = 0.0) -> float:
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        best = np.inf
        for o in self.obstacles_at(t):
            best = min(best, o.segment_distance(a, b) - o.pad)
        return float(best)

    def clearance(self, p, t: float = 0.0) -> float:
        """Actual distance from p to the raw obstacle geometry at time t."""
        p = np.asarray(p, dtype=float)
        best = np.inf
        for o in self.obstacles_at(t):
            best = min(best, o.distance(p))
        return float(best)

    def point_free(self, p, r: float, t: float = 0.0) -> bool:
        if not self.in_bounds(p, r):
            return False
        return self.point_clearance(p, t) > r

    def segment_free(self, a, b, r: float, t: float = 0.0) -> bool:
        # The shrunk workspace is convex, so checking both endpoints covers the segment.
        if not (self.in_bounds(a, r) and self.in_bounds(b, r)):
            return False
        return self.segment_clearance(a, b, t) > r

    # ---------- Batch queries ---------- #
    def point_distances(self, points: np.ndarray, t: float = 0.0, obstacles=None) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        best = np.full(len(points), np.inf)
        for o in self.obstacles_at(t) if obstacles is None else obstacles:
            dist = np.linalg.norm(points - o.project(points), axis=1) - o.pad
            np.minimum(best, dist, out=best)
        return best

    def segment_distances(self, a: np.ndarray, b: np.ndarray, t: float = 0.0, obstacles=None) -> np.ndarray:
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        d = b - a
        best = np.full(len(a), np.inf)
        if len(a) == 0:
            return best
        for o in self.obstacles_at(t) if obstacles is None else obstacles:
            # Squared distance to a convex set is convex and C1 along the segment;
            # bisect on the sign of its derivative.
            lo = np.zeros(len(a))
            hi = np.ones(len(a))
            for _ in range(_BISECTION_STEPS):
                mid = 0.5 * (lo + hi)
                q = a + mid[:, None] * d
                slope = np.einsum("ij,ij->i", q - o.project(q), d)
                rising = slope > 0.0
                hi = np.where(rising, mid, hi)
                lo = np.where(rising, lo, mid)
            candidates = [a, b, a + (0.5 * (lo + hi))[:, None] * d]
            dist = np.min([np.linalg.norm(c - o.project(c), axis=1) for c in candidates], axis=0) - o.pad
            np.minimum(best, dist, out=best)
        return best

    def points_free(self, points, r: float, t: float = 0.0) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        ok = self._bounds_ok(points, r)
        if self.obstacles and ok.any():
            ok[ok] = self.point_distances(points[ok], t) > r
        return ok

    def segments_free(self, a, b, r: float, t: float = 0.0) -> np.ndarray:
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_2d(np.asarray(b, dtype=float))
        ok = self._bounds_ok(a, r) & self._bounds_ok(b, r)
        if self.obstacles and ok.any():
            ok[ok] = self.segment_distances(a[ok], b[ok], t) > r
        return ok

    # ---------- Occupancy ---------- #
    def occupancy(self, r: float, voxel: float) -> OccupancyGrid:
        """Cached conservative grid over the static obstacles for radius r."""
        key = (round(float(r), 12), round(float(voxel), 12))
        if key not in self._grids:
            self._grids[key] = OccupancyGrid.build(self.bounds_min, self.bounds_max, self.static_obstacles, r, voxel)
        return self._grids[key]

    def sample_free(self, rng: np.random.Generator, r: float, lo=None, hi=None, t: float = 0.0, tries: int = 1000):
        """Uniformly sample a free position in [lo, hi] (workspace bounds by default)."""
        lo = self.bounds_min + r if lo is None else np.maximum(np.asarray(lo, float), self.bounds_min + r)
        hi = self.bounds_max - r if hi is None else np.minimum(np.asarray(hi, float), self.bounds_max - r)
        for _ in range(tries):
            p = self.project_plane(rng.uniform(lo, hi))
            if self.point_free(p, r, t):
                return p
        return None

    def __repr__(self) -> str:
        return (
            f"Workspace(bounds={self.bounds_min.tolist()}..{self.bounds_max.tolist()}, "
            f"obstacles={len(self.obstacles)}, planar={self.planar})"
        )
