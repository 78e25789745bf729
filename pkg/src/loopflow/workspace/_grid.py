import numpy as np


class OccupancyGrid:
    """
    Conservative voxel occupancy of the static obstacles for one query radius.

    A voxel is occupied iff its center lies within r + half the voxel diagonal
    of a static obstacle (pad included). Any point whose sphere of radius r
    touches a static obstacle therefore falls into an occupied voxel.
    """

    def __init__(self, origin, shape, voxel: float, occupied: np.ndarray, radius: float):
        self.origin = np.asarray(origin, dtype=float)
        self.shape = tuple(int(s) for s in shape)
        self.voxel = float(voxel)
        self.occupied = occupied
        self.radius = float(radius)

    @classmethod
    def build(cls, lo, hi, obstacles, radius: float, voxel: float) -> "OccupancyGrid":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        shape = np.maximum(np.ceil((hi - lo) / voxel).astype(int), 1)
        axes = [lo[k] + (np.arange(shape[k]) + 0.5) * voxel for k in range(3)]
        centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        reach = radius + 0.5 * voxel * np.sqrt(3.0)
        occupied = np.zeros(len(centers), dtype=bool)
        for obs in obstacles:
            dist = np.linalg.norm(centers - obs.project(centers), axis=1)
            occupied |= dist <= reach + obs.pad
        return cls(lo, shape, voxel, occupied.reshape(shape), radius)

    def index(self, points: np.ndarray) -> np.ndarray:
        idx = np.floor((np.atleast_2d(points) - self.origin) / self.voxel).astype(int)
        return np.clip(idx, 0, np.asarray(self.shape) - 1)

    def occupied_many(self, points: np.ndarray) -> np.ndarray:
        idx = self.index(points)
        return self.occupied[idx[:, 0], idx[:, 1], idx[:, 2]]

    @property
    def fill_ratio(self) -> float:
        return float(self.occupied.mean())
