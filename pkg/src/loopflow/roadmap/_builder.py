import itertools
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from loopflow._utils.exception import EmptyRoadmap, TargetBlocked
from loopflow._utils.validation import as_vector
from loopflow.logger import get_logger
from loopflow.schemas import RoadmapParams
from loopflow.workspace import Workspace

from ._roadmap import Roadmap

logger = get_logger("loopflow.roadmap")


class RoadmapBuilder:
    """
    Builds per-agent roadmaps over one shared lattice.

    The lattice, its static collision results and the static edge set are
    computed once per (workspace, radius, params). Each `build` call only
    re-checks moving obstacles at the query time, adds the target vertex and
    runs Dijkstra from it.

    Example:
        >>> builder = RoadmapBuilder(ws, r_agent=0.2, params=RoadmapParams())
        >>> rm = builder.build(target=[1.0, 0.0, 1.0], t=0.0)
        >>> rm.descent_direction([0.0, 0.0, 1.0])
    """

    def __init__(self, ws: Workspace, r_agent: float, params: Optional[RoadmapParams] = None):
        self.ws = ws
        self.r_agent = float(r_agent)
        self.params = params or RoadmapParams()
        self._live_key: Optional[tuple[float, float]] = None
        self._live: Optional[tuple[np.ndarray, np.ndarray]] = None
        self._build_lattice()

    # ---------- Static part ---------- #
    def _axis(self, k: int) -> np.ndarray:
        h = self.params.lattice_h
        lo = self.ws.bounds_min[k] + self.r_agent
        hi = self.ws.bounds_max[k] - self.r_agent
        if hi < lo:
            return np.empty(0)
        count = int(np.floor((hi - lo) / h + 1e-9)) + 1
        start = lo + 0.5 * ((hi - lo) - (count - 1) * h)
        return start + h * np.arange(count)

    def _build_lattice(self) -> None:
        h = self.params.lattice_h
        axes = [self._axis(0), self._axis(1)]
        axes.append(np.array([self.ws.plane_z]) if self.ws.planar else self._axis(2))
        shape = tuple(len(a) for a in axes)
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)

        static = self.ws.static_obstacles
        free = np.ones(len(grid), dtype=bool)
        if static and len(grid):
            # Unoccupied voxels are certainly free; only the rest get an exact check.
            occ = self.ws.occupancy(self.r_agent, 0.5 * h)
            maybe = occ.occupied_many(grid)
            if maybe.any():
                free[maybe] = self.ws.point_distances(grid[maybe], obstacles=static) > self.r_agent

        index = -np.ones(len(grid), dtype=int)
        index[free] = np.arange(int(free.sum()))
        self.vertices = grid[free]
        if len(self.vertices) == 0:
            raise EmptyRoadmap(f"No lattice vertex of {self.ws!r} is free for radius {self.r_agent}.")

        steps = [d for d in itertools.product((-1, 0, 1), repeat=3) if d > (0, 0, 0)]
        if self.ws.planar:
            steps = [d for d in steps if d[2] == 0]
        ijk = np.stack(np.unravel_index(np.arange(len(grid)), shape), axis=-1)
        us, vs = [], []
        for d in steps:
            nb = ijk + np.asarray(d)
            valid = np.all((nb >= 0) & (nb < np.asarray(shape)), axis=1) & free
            src = np.flatnonzero(valid)
            dst = np.ravel_multi_index(tuple(nb[valid].T), shape)
            ok = free[dst]
            us.append(index[src[ok]])
            vs.append(index[dst[ok]])
        u = np.concatenate(us) if us else np.empty(0, dtype=int)
        v = np.concatenate(vs) if vs else np.empty(0, dtype=int)
        if static and len(u):
            ok = self.ws.segment_distances(self.vertices[u], self.vertices[v], obstacles=static) > self.r_agent
            u, v = u[ok], v[ok]
        self.edges_u = u
        self.edges_v = v
        self.weights = np.linalg.norm(self.vertices[u] - self.vertices[v], axis=1)
        self._tree = cKDTree(self.vertices)
        logger.debug(f"lattice h={h}: {len(self.vertices)} free vertices, {len(u)} static edges")

    # ---------- Moving obstacles ---------- #
    def _live_masks(self, t: float, margin: float) -> tuple[np.ndarray, np.ndarray]:
        key = (float(t), float(margin))
        if self._live_key == key and self._live is not None:
            return self._live
        vert_ok = np.ones(len(self.vertices), dtype=bool)
        edge_ok = np.ones(len(self.edges_u), dtype=bool)
        r = self.r_agent
        a = self.vertices[self.edges_u]
        b = self.vertices[self.edges_v]
        mid = 0.5 * (a + b)
        half = 0.5 * self.weights
        for obs in self.ws.dynamic_obstacles:
            frozen = obs.at(t, margin)
            vert_ok &= np.linalg.norm(self.vertices - frozen.project(self.vertices), axis=1) - frozen.pad > r
            near = np.linalg.norm(mid - frozen.project(mid), axis=1) - frozen.pad - half <= r
            if near.any():
                hit = self.ws.segment_distances(a[near], b[near], obstacles=[frozen]) <= r
                idx = np.flatnonzero(near)[hit]
                edge_ok[idx] = False
        edge_ok &= vert_ok[self.edges_u] & vert_ok[self.edges_v]
        self._live_key = key
        self._live = (vert_ok, edge_ok)
        return self._live

    # ---------- Per-target build ---------- #
    def build(self, target, t: float = 0.0, margin: float = 0.0) -> Roadmap:
        """
        Roadmap for one target at time t, moving obstacles frozen and inflated by margin.

        Raises:
            TargetBlocked: If the target itself is not collision-free.
            EmptyRoadmap: If no vertex survives the moving obstacles.
        """
        target = self.ws.project_plane(as_vector(target, "target"))
        snapshot = self.ws.frozen(t, margin)
        if not snapshot.point_free(target, self.r_agent):
            raise TargetBlocked(f"Target {np.round(target, 4).tolist()} is not collision-free at t={t:.3f}.", target)

        vert_ok, edge_ok = self._live_masks(t, margin)
        if not vert_ok.any():
            raise EmptyRoadmap(f"Every lattice vertex is blocked by moving obstacles at t={t:.3f}.")

        keep = np.flatnonzero(vert_ok)
        remap = -np.ones(len(self.vertices), dtype=int)
        remap[keep] = np.arange(len(keep))
        n = len(keep)
        vertices = np.vstack([self.vertices[keep], target[None, :]])

        near = np.asarray(self._tree.query_ball_point(target, self.params.connect_radius), dtype=int)
        near = np.sort(near[vert_ok[near]]) if near.size else near
        if near.size:
            ok = snapshot.segments_free(np.repeat(target[None, :], len(near), axis=0), self.vertices[near], self.r_agent)
            near = near[ok]
        u = np.concatenate([remap[self.edges_u[edge_ok]], np.full(len(near), n)])
        v = np.concatenate([remap[self.edges_v[edge_ok]], remap[near]])
        w = np.concatenate([self.weights[edge_ok], np.linalg.norm(self.vertices[near] - target, axis=1)])

        return Roadmap(
            vertices,
            u,
            v,
            w,
            target_index=n,
            neighbor_radius=self.params.neighbor_radius,
            lattice_h=self.params.lattice_h,
            connect_radius=self.params.connect_radius,
        )


def build_roadmap(
    ws: Workspace,
    target,
    r_agent: float,
    params: Optional[RoadmapParams] = None,
    t: float = 0.0,
    margin: float = 0.0,
) -> Roadmap:
    """One-off roadmap build (no lattice reuse)."""
    return RoadmapBuilder(ws, r_agent, params).build(target, t, margin)
