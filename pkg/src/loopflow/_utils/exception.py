from typing import Any, Optional


class LoopflowError(Exception):
    """Base exception for all Loopflow-related errors."""
    def __init__(self, message: str, error_code: str = None, original_error: Exception = None):
        self.message = message
        self.error_code = error_code
        self.original_error = original_error
        super().__init__(message)


# ---------- Geometry / roadmap ---------- #
class TargetBlocked(LoopflowError):
    """Raised when a roadmap target is not collision-free."""
    def __init__(self, message: str, target=None):
        super().__init__(message, error_code="TARGET_BLOCKED")
        self.target = target

class EmptyRoadmap(LoopflowError):
    """Raised when no lattice vertex of the workspace is collision-free."""
    def __init__(self, message: str):
        super().__init__(message, error_code="EMPTY_ROADMAP")

class NotUnit(LoopflowError):
    """Raised when a direction vector is not unit length."""
    def __init__(self, message: str):
        super().__init__(message, error_code="NOT_UNIT")


# ---------- Planning ---------- #
class NoSolutionWithinDeadline(LoopflowError):
    """Raised when the search exhausts its budget before reaching a goal configuration."""
    def __init__(self, message: str, nodes_expanded: int = 0, max_depth: int = 0, violations: Optional[list] = None):
        super().__init__(message, error_code="NO_SOLUTION")
        self.nodes_expanded = nodes_expanded
        self.max_depth = max_depth
        # Checker violations when a goal configuration was found but rejected.
        self.violations = violations or []


# ---------- Tracking ---------- #
class NonConvergent(LoopflowError):
    """Raised when the Riccati iteration does not reach its residual tolerance."""
    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message, error_code="NON_CONVERGENT")
        self.residual = residual


# ---------- Runtime ---------- #
class RepairFailed(LoopflowError):
    """Raised when query repair cannot make a configuration feasible."""
    def __init__(self, message: str, offending: Optional[list[int]] = None):
        super().__init__(message, error_code="REPAIR_FAILED")
        self.offending = offending or []

class MissionAborted(LoopflowError):
    """Raised when a mission stops early; carries the metrics collected so far."""
    def __init__(self, message: str, metrics: Any = None, original_error: Exception = None):
        super().__init__(message, error_code="MISSION_ABORTED", original_error=original_error)
        self.metrics = metrics


# ---------- Documents ---------- #
class ScenarioError(LoopflowError):
    """Raised when a scenario document fails to parse or validate."""
    def __init__(self, message: str, diagnostics: Optional[list[dict]] = None):
        super().__init__(message, error_code="SCENARIO_ERROR")
        self.diagnostics = diagnostics or []

class PlanFileError(LoopflowError):
    """Raised when a plan document cannot be read."""
    def __init__(self, message: str, original_error: Exception = None):
        super().__init__(message, error_code="PLAN_FILE_ERROR", original_error=original_error)
