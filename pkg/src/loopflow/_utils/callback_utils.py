import inspect
from typing import Callable, Optional, Sequence


def call_callback(callback: Optional[Callable], *args):
    """Call a hook already checked by `validate_callback`; None is a no-op."""
    if callback is None:
        return None
    return callback(*args)


def validate_callback(callback: Optional[Callable], expected_args: Sequence[str], name: str) -> None:
    """
    Check that a mission hook takes exactly `expected_args`, in order.

    Hooks are always called positionally, so a mismatch is reported when the
    hook is registered rather than at the first event.

    Raises:
        TypeError: If the hook is not callable or its parameters differ.

    Example:
        >>> validate_callback(lambda agent, goal, t: None, ["agent", "goal", "t"], "on_goal")
    """
    if callback is None:
        return
    if not callable(callback):
        raise TypeError(f"{name} must be callable, got {type(callback).__name__}.")
    declared = list(inspect.signature(callback).parameters)
    if declared != list(expected_args):
        raise TypeError(f"{name} must take ({', '.join(expected_args)}), got ({', '.join(declared)}).")
