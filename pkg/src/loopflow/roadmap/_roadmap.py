from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

# Zero-length edges would vanish from a sparse adjacency matrix.
_MIN_WEIGHT = 1e-12


def cost_to_go(n_vertices: int, edges_u, edges_v, weights, source: int) -> np.ndarray:
    """Dijkstra distances from `source` over an undirected weighted edge list."""
    w = np.maximum(np.asarray(weights, dtype=float), _MIN_WEIGHT)
    graph = csr_matrix((w, (np.asarray(edges_u), np.asarray(edges_v))), shape=(n_vertices, n_vertices))
    return dijkstra(graph, directed=False, indices=source)


class Roadmap:
    """
    One agent's roadmap: vertices, weighted edges, cost-to-go and a radius index.

    Immutable after construction. `phi[i]` is the shortest-path length from
    vertex i to the target vertex (inf when unreachable).
    """

    def __init__(
        self,
        vertices: np.ndarray,
        edges_u: np.ndarray,
        edges_v: np.ndarray,
        weights: np.ndarray,
        target_index: int,
        neighbor_radius: float,
        phi: Optional[np.ndarray] = None,
        lattice_h: Optional[float] = None,
        connect_radius: Optional[float] = None,
    ):
        self.vertices = np.asarray(vertices, dtype=float)
        self.vertices.setflags(write=False)
        self.edges_u = np.asarray(edges_u, dtype=int)
        self.edges_v = np.asarray(edges_v, dtype=int)
        self.weights = np.asarray(weights, dtype=float)
        self.target_index = int(target_index)
        self.neighbor_radius = float(neighbor_radius)
        self.lattice_h = lattice_h
        self.connect_radius = connect_radius
        if phi is None:
            phi = cost_to_go(len(self.vertices), self.edges_u, self.edges_v, self.weights, self.target_index)
        self.phi = np.asarray(phi, dtype=float)
        self.phi.setflags(write=False)
        self.tree = cKDTree(self.vertices)
        self._finite = np.isfinite(self.phi)
        self._padded_phi = np.append(self.phi, np.inf)
        self._k_query = self._query_size(self.neighbor_radius)

    @classmethod
    def from_edges(cls, vertices, edges, target_index: int, neighbor_radius: float = 1.0) -> "Roadmap":
        """Roadmap over an explicit edge list of (u, v) pairs weighted by Euclidean length."""
        vertices = np.asarray(vertices, dtype=float)
        edges = np.asarray(edges, dtype=int).reshape(-1, 2)
        w = np.linalg.norm(vertices[edges[:, 0]] - vertices[edges[:, 1]], axis=1)
        return cls(vertices, edges[:, 0], edges[:, 1], w, target_index, neighbor_radius)

    @property
    def target(self) -> np.ndarray:
        return self.vertices[self.target_index]

    @property
    def size(self) -> int:
        return len(self.vertices)

    def _query_size(self, radius: float) -> int:
        if self.lattice_h:
            per_axis = int(np.floor(2.0 * radius / self.lattice_h)) + 1
            return int(min(self.size, per_axis**3 + 2))
        return self.size

    # ---------- Radius search ---------- #
    def radius_neighbors(self, p, r_nbr: Optional[float] = None) -> np.ndarray:
        """Indices of vertices within r_nbr of p that have finite cost-to-go, sorted."""
        r = self.neighbor_radius if r_nbr is None else float(r_nbr)
        idx = np.asarray(self.tree.query_ball_point(np.asarray(p, dtype=float), r), dtype=int)
        idx = idx[self._finite[idx]] if idx.size else idx
        return np.sort(idx)

    # ---------- Cost estimate ---------- #
    def cost_estimates(self, points: np.ndarray) -> np.ndarray:
        """Batch of min over radius neighbours of phi(v) + |v - p| (nearest finite vertices as fallback)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        k = max(self._k_query, 1)
        dist, idx = self.tree.query(points, k=k, distance_upper_bound=self.neighbor_radius)
        dist = np.asarray(dist).reshape(len(points), -1)
        idx = np.asarray(idx).reshape(len(points), -1)
        est = np.min(self._padded_phi[idx] + dist, axis=1)
        missing = ~np.isfinite(est)
        if missing.any():
            est[missing] = [self._nearest_estimate(p) for p in points[missing]]
        return est

    def cost_estimate(self, p) -> float:
        return float(self.cost_estimates(np.asarray(p, dtype=float))[0])

    def _nearest_estimate(self, p: np.ndarray) -> float:
        finite = np.flatnonzero(self._finite)
        if finite.size == 0:
            return np.inf
        d = np.linalg.norm(self.vertices[finite] - p, axis=1)
        return float(np.min(self.phi[finite] + d))

    # ---------- Gradient ---------- #
    def gradient(self, p, r_nbr: Optional[float] = None) -> Optional[np.ndarray]:
        """The weighted sum of (phi(v) - mean phi)(v - p) over the radius neighbours."""
        p = np.asarray(p, dtype=float)
        nbrs = self.radius_neighbors(p, r_nbr)
        if nbrs.size <= 1:
            return None
        phi = self.phi[nbrs]
        return ((phi - phi.mean())[:, None] * (self.vertices[nbrs] - p)).sum(axis=0)

    def descent_direction(self, p, r_nbr: Optional[float] = None) -> Optional[np.ndarray]:
        """Unit vector of decreasing cost-to-go at p, or None where it is undefined."""
        g = self.gradient(p, r_nbr)
        if g is None:
            return None
        norm = float(np.linalg.norm(g))
        if norm < 1e-9:
            return None
        return -g / norm

    def fallback_direction(self, p, r_nbr: Optional[float] = None) -> Optional[np.ndarray]:
        """Direction to the neighbour minimizing phi(v) + |v - p|, or None."""
        p = np.asarray(p, dtype=float)
        nbrs = self.radius_neighbors(p, r_nbr)
        if nbrs.size == 0:
            return None
        offsets = self.vertices[nbrs] - p
        dist = np.linalg.norm(offsets, axis=1)
        away = dist > 1e-9
        if not away.any():
            return None
        score = np.where(away, self.phi[nbrs] + dist, np.inf)
        best = int(np.argmin(score))
        return offsets[best] / dist[best]

    def heading(self, p) -> Optional[np.ndarray]:
        """Descent direction with the fallback applied; None means use the identity frame."""
        d = self.descent_direction(p)
        if d is None:
            d = self.fallback_direction(p)
        return d

    # ---------- Export ---------- #
    def as_graph(self):
        """The roadmap as a networkx.Graph with `pos` and `phi` node attributes."""
        import networkx as nx

        graph = nx.Graph()
        for i, (v, phi) in enumerate(zip(self.vertices, self.phi)):
            graph.add_node(i, pos=tuple(v.tolist()), phi=float(phi))
        for u, v, w in zip(self.edges_u.tolist(), self.edges_v.tolist(), self.weights.tolist()):
            graph.add_edge(u, v, weight=w)
        return graph

    def __repr__(self) -> str:
        reachable = int(self._finite.sum())
        return f"Roadmap(vertices={self.size}, edges={len(self.edges_u)}, reachable={reachable}, target={self.target.tolist()})"
