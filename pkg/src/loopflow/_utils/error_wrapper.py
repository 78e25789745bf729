"""
Error wrapper module for Loopflow.
This module converts errors raised by CLI commands into Loopflow-specific
errors, renders them, and maps them to process exit codes.
"""

import functools
import json
from typing import Any, Callable, Union

from pydantic import ValidationError

from loopflow._utils.exception import (
    LoopflowError,
    TargetBlocked,
    EmptyRoadmap,
    NotUnit,
    NoSolutionWithinDeadline,
    NonConvergent,
    RepairFailed,
    MissionAborted,
    ScenarioError,
    PlanFileError,
)
from loopflow._utils.printing import error_message

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def map_exception_to_loopflow(error: Exception) -> LoopflowError:
    """
    Maps third-party and builtin errors to Loopflow-specific errors.

    Args:
        error: The original error

    Returns:
        LoopflowError: A wrapped Loopflow-specific error
    """
    if isinstance(error, LoopflowError):
        return error

    if isinstance(error, ValidationError):
        return ScenarioError(
            f"Document validation failed: {error.error_count()} error(s).",
            diagnostics=[
                {"path": ".".join(str(p) for p in e["loc"]), "expected": e["type"], "message": e["msg"]}
                for e in error.errors()
            ],
        )

    if isinstance(error, json.JSONDecodeError):
        return ScenarioError(
            f"Malformed JSON at line {error.lineno}, column {error.colno}: {error.msg}",
            diagnostics=[{"path": f"line {error.lineno}:{error.colno}", "expected": "json", "message": error.msg}],
        )

    if isinstance(error, (FileNotFoundError, IsADirectoryError, PermissionError)):
        return PlanFileError(f"Cannot read file: {error}", original_error=error)

    return LoopflowError(
        message=f"Unexpected error: {type(error).__name__}: {error}",
        error_code="UNKNOWN_ERROR",
        original_error=error,
    )


def exit_code_for(error: LoopflowError) -> int:
    """Parse and usage problems exit with 2, every other failure with 1."""
    if isinstance(error, (ScenarioError, PlanFileError)):
        return EXIT_USAGE
    return EXIT_FAILURE


def loopflow_error_handler(show_error_details: bool = True):
    """
    Decorator for CLI command functions returning an exit code.

    Any raised exception is converted to a LoopflowError, optionally shown
    as an error panel, and turned into the matching exit code.

    Args:
        show_error_details: Whether to display error details to user (default: True)
    """

    def decorator(func: Callable[..., int]) -> Callable[..., int]:
        @functools.wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            try:
                return func(*args, **kwargs)
            except KeyboardInterrupt:
                return 130
            except Exception as e:
                loopflow_error = map_exception_to_loopflow(e)
                if show_error_details:
                    _display_error(loopflow_error)
                return exit_code_for(loopflow_error)

        return wrapper

    return decorator


def _display_error(error: Union[LoopflowError, Exception]) -> None:
    """
    Displays error information to the user using the existing error_message function.

    Args:
        error: The Loopflow error to display
    """
    error_type_map = {
        TargetBlocked: "Roadmap Error",
        EmptyRoadmap: "Roadmap Error",
        NotUnit: "Geometry Error",
        NoSolutionWithinDeadline: "Planning Error",
        NonConvergent: "Controller Error",
        RepairFailed: "Repair Error",
        MissionAborted: "Mission Aborted",
        ScenarioError: "Scenario Error",
        PlanFileError: "Plan File Error",
    }

    error_type_name = error_type_map.get(type(error), "Loopflow Error")
    error_code = getattr(error, "error_code", None)

    if hasattr(error, "message"):
        detail = error.message
    else:
        detail = str(error)

    notes = []
    for diag in getattr(error, "diagnostics", []) or []:
        notes.append(f"{diag.get('path', '?')}: {diag.get('message', '')} ({diag.get('expected', '')})")
    if isinstance(error, NoSolutionWithinDeadline):
        notes.append(f"nodes expanded: {error.nodes_expanded}, max depth: {error.max_depth}")
    if isinstance(error, RepairFailed) and error.offending:
        notes.append(f"offending agents: {error.offending}")

    error_message(error_type=error_type_name, detail=detail, error_code=error_code, notes=notes)
