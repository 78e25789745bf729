import zlib

import numpy as np


class SeedStreams:
    """
    Derives independent, reproducible random generators from one scenario seed.

    Each named stream is seeded by (seed, crc32(name)) so that adding draws to
    one component never shifts the numbers another component sees.

    Example:
        >>> streams = SeedStreams(7)
        >>> rng = streams.mission
        >>> streams.get("mission") is rng
        True
    """

    def __init__(self, seed: int = 0):
        self.seed = int(seed)
        self._streams: dict[str, np.random.Generator] = {}

    def get(self, name: str) -> np.random.Generator:
        if name not in self._streams:
            self._streams[name] = self.fresh(name)
        return self._streams[name]

    def fresh(self, name: str, *salt: int) -> np.random.Generator:
        """A new generator for `name`, independent of the cached one."""
        key = [self.seed, zlib.crc32(name.encode("utf-8")), *map(int, salt)]
        return np.random.default_rng(np.random.SeedSequence(key))

    @property
    def mission(self) -> np.random.Generator:
        return self.get("mission")

    @property
    def disturbance(self) -> np.random.Generator:
        return self.get("disturbance")
