"""Twin Mach-Zehnder weak-measurement simulator."""
from .pathspace import (
    NetworkConfig,
    PathState,
    Plane,
    ProjectorObservable,
    backward_propagate,
    class_selection,
    expectation,
    forward_propagate,
    weak_value,
)
from .pointerlab import FidelityMode, GaussianMixture, GaussianPointer, JointState, couple, postselect, propagate_joint

__version__ = "0.1.0"

__all__ = [
    "FidelityMode",
    "GaussianMixture",
    "GaussianPointer",
    "JointState",
    "NetworkConfig",
    "PathState",
    "Plane",
    "ProjectorObservable",
    "backward_propagate",
    "class_selection",
    "couple",
    "expectation",
    "forward_propagate",
    "postselect",
    "propagate_joint",
    "weak_value",
]
