import numpy as np

from loopflow._utils.validation import validate_unit

_E1 = np.array([1.0, 0.0, 0.0])


def _skew(w: np.ndarray) -> np.ndarray:
    return np.array(
        [
            [0.0, -w[2], w[1]],
            [w[2], 0.0, -w[0]],
            [-w[1], w[0], 0.0],
        ]
    )


def rotation_to(direction) -> np.ndarray:
    """
    Minimal rotation taking [1, 0, 0] onto `direction` (Rodrigues formula).

    The antiparallel case has no unique minimal axis; a half turn about z is used.

    Raises:
        NotUnit: If the direction norm deviates from 1 by more than 1e-6.
    """
    u = validate_unit(direction)
    u = u / np.linalg.norm(u)
    axis = np.cross(_E1, u)
    s = float(np.linalg.norm(axis))
    c = float(_E1 @ u)
    if s < 1e-12:
        if c > 0.0:
            return np.eye(3)
        return np.diag([-1.0, -1.0, 1.0])
    k = _skew(axis / s)
    return np.eye(3) + s * k + (1.0 - c) * (k @ k)
