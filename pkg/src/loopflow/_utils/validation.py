import numpy as np

from loopflow._utils.exception import LoopflowError, NotUnit


def as_vector(value, name: str = "vector", dim: int = 3) -> np.ndarray:
    """
    Normalize a position-like input to a finite float array of shape (dim,).

    Raises:
        LoopflowError: If the value has the wrong shape or non-finite entries.
    """
    arr = np.asarray(value, dtype=float)
    if arr.shape != (dim,):
        raise LoopflowError(
            f"Invalid {name}: expected {dim} coordinates, got shape {arr.shape}.",
            error_code="INVALID_VECTOR",
        )
    if not np.all(np.isfinite(arr)):
        raise LoopflowError(f"Invalid {name}: non-finite coordinates {arr.tolist()}.", error_code="INVALID_VECTOR")
    return arr


def as_points(value, name: str = "points") -> np.ndarray:
    """Normalize a list of positions to a finite (n, 3) float array."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise LoopflowError(f"Invalid {name}: expected shape (n, 3), got {arr.shape}.", error_code="INVALID_VECTOR")
    if not np.all(np.isfinite(arr)):
        raise LoopflowError(f"Invalid {name}: non-finite coordinates.", error_code="INVALID_VECTOR")
    return arr


def validate_unit(direction, tol: float = 1e-6) -> np.ndarray:
    """
    Validates that the direction is a unit vector within tolerance.

    Raises:
        NotUnit: If | |dir| - 1 | exceeds tol.
    """
    arr = as_vector(direction, "direction")
    norm = float(np.linalg.norm(arr))
    if abs(norm - 1.0) > tol:
        raise NotUnit(f"Direction {arr.tolist()} has norm {norm:.9f}; expected 1 +/- {tol}.")
    return arr
