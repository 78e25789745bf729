import numpy as np


def pair_min_distance(a0, a1, b0, b1) -> float:
    """
    Minimum distance between two points moving linearly over the same step.

    The relative displacement d(s) = d0 + s*(d1 - d0) is linear in s, so the
    squared distance is a parabola minimized in closed form on [0, 1].
    """
    d0 = np.asarray(a0, float) - np.asarray(b0, float)
    e = (np.asarray(a1, float) - np.asarray(b1, float)) - d0
    ee = float(e @ e)
    s = 0.0 if ee <= 0.0 else float(np.clip(-(d0 @ e) / ee, 0.0, 1.0))
    return float(np.linalg.norm(d0 + s * e))


def swept_pair_distances(a0: np.ndarray, a1: np.ndarray, b0: np.ndarray, b1: np.ndarray) -> np.ndarray:
    """Batch form of pair_min_distance over broadcastable (..., 3) arrays."""
    d0 = a0 - b0
    e = (a1 - b1) - d0
    ee = np.einsum("...k,...k->...", e, e)
    de = np.einsum("...k,...k->...", d0, e)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(ee > 0.0, np.clip(-de / np.where(ee > 0.0, ee, 1.0), 0.0, 1.0), 0.0)
    closest = d0 + s[..., None] * e
    return np.linalg.norm(closest, axis=-1)
