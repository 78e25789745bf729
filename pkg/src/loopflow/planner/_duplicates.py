import itertools
from collections import defaultdict
from typing import Any, Optional

import numpy as np

_NEIGHBOURHOOD = np.array(list(itertools.product((-1, 0, 1), repeat=3)), dtype=np.int64)

# Once this few candidates remain, finish with the exact vectorized test.
_EXACT_AT = 32


class ConfigurationIndex:
    """
    Visited set with geometric duplicate detection.

    Two configurations are duplicates when every agent is within `eps` of
    its counterpart (max over agents of the Euclidean distance). Each agent
    keeps an inverted index from voxel (size eps) to configuration ids; a
    duplicate can only sit in the 27 voxels around the query, so
    intersecting those candidate sets is exact before the final distance test.
    """

    def __init__(self, n: int, eps: float):
        if eps <= 0:
            raise ValueError("eps must be positive")
        self.n = int(n)
        self.eps = float(eps)
        self._buckets: list[defaultdict] = [defaultdict(list) for _ in range(self.n)]
        self._configs = np.empty((64, self.n, 3))
        self._payload: list[Any] = []

    def __len__(self) -> int:
        return len(self._payload)

    def _keys(self, q: np.ndarray) -> np.ndarray:
        return np.floor(q / self.eps).astype(np.int64)

    def add(self, q: np.ndarray, payload: Any = None) -> int:
        q = np.asarray(q, dtype=float)
        idx = len(self._payload)
        if idx == len(self._configs):
            grown = np.empty((2 * len(self._configs), self.n, 3))
            grown[:idx] = self._configs
            self._configs = grown
        self._configs[idx] = q
        self._payload.append(payload)
        for i, key in enumerate(map(tuple, self._keys(q))):
            self._buckets[i][key].append(idx)
        return idx

    def _candidates(self, agent: int, key: np.ndarray) -> set:
        bucket = self._buckets[agent]
        found: set = set()
        for shift in key + _NEIGHBOURHOOD:
            ids = bucket.get(tuple(shift))
            if ids:
                found.update(ids)
        return found

    def find_id(self, q: np.ndarray) -> Optional[int]:
        """Id of a visited duplicate of q, or None."""
        if not self._payload:
            return None
        q = np.asarray(q, dtype=float)
        keys = self._keys(q)
        cand = self._candidates(0, keys[0])
        for agent in range(1, self.n):
            if len(cand) <= _EXACT_AT or not cand:
                break
            cand &= self._candidates(agent, keys[agent])
        if not cand:
            return None
        ids = np.fromiter(sorted(cand), dtype=np.int64)
        dev = np.linalg.norm(self._configs[ids] - q, axis=2).max(axis=1)
        hit = np.flatnonzero(dev <= self.eps)
        return int(ids[hit[0]]) if hit.size else None

    def find(self, q: np.ndarray) -> Optional[Any]:
        """Payload stored with a visited duplicate of q, or None."""
        idx = self.find_id(q)
        return None if idx is None else self._payload[idx]

    def contains(self, q: np.ndarray) -> bool:
        return self.find_id(q) is not None


def is_duplicate(q, visited: ConfigurationIndex, eps: Optional[float] = None) -> bool:
    """True iff some visited configuration is within eps of q in every agent."""
    if eps is not None and abs(eps - visited.eps) > 1e-15:
        raise ValueError(f"index was built for eps={visited.eps}, queried with eps={eps}")
    return visited.contains(np.asarray(q, dtype=float))
