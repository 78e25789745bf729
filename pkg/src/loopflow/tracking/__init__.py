from ._trajectory import ReferenceTrajectory, TrajectorySample, interpolate
from ._control import ControlGains, axis_model, control_step, derive_gains
from ._plant import Disturbance, RobotState, step_plant

__all__ = [
    "ReferenceTrajectory",
    "TrajectorySample",
    "interpolate",
    "ControlGains",
    "axis_model",
    "control_step",
    "derive_gains",
    "Disturbance",
    "RobotState",
    "step_plant",
]
