import dataclasses
from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel


def to_serializable(obj: Any) -> Any:
    """
    Recursively converts any object (Pydantic models, Enums, dataclasses,
    numpy arrays, dicts, lists, etc.) into a fully JSON-serializable form.
    - Enum -> .value
    - BaseModel -> dict with all fields serialized recursively
    - numpy array -> nested lists of python floats
    """
    if isinstance(obj, Enum):
        return obj.value

    if isinstance(obj, BaseModel):
        return {k: to_serializable(v) for k, v in obj.model_dump(by_alias=True).items()}

    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_serializable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}

    if isinstance(obj, np.ndarray):
        return obj.tolist()

    if isinstance(obj, np.generic):
        return obj.item()

    if isinstance(obj, dict):
        return {k: to_serializable(v) for k, v in obj.items()}

    if isinstance(obj, (list, tuple, set)):
        return [to_serializable(item) for item in obj]

    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj

    if hasattr(obj, "__dict__"):
        return to_serializable(vars(obj))

    try:
        return str(obj)
    except Exception:
        return "<unserializable>"
