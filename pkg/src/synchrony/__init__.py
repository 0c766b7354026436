"""Group synchronization sandbox: coupled-oscillator simulator, sync metrics,
an RL frequency-adaptation agent, reference experiments, and a live session
service for human-in-the-loop trials.
"""

from ._kernels import BACKEND, wrap_angles
from .graphs import (
    GraphSpec,
    attach_avatar,
    make_complete_graph,
    make_ring_graph,
    replace_node_with_avatar,
)
from .model import (
    FREQ_FLOOR,
    FrequencyProcess,
    NetworkState,
    SimConfig,
    StepView,
    Trajectory,
    euler_step,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "FREQ_FLOOR",
    "FrequencyProcess",
    "GraphSpec",
    "NetworkState",
    "SimConfig",
    "StepView",
    "Trajectory",
    "attach_avatar",
    "euler_step",
    "make_complete_graph",
    "make_ring_graph",
    "replace_node_with_avatar",
    "simulate",
    "wrap_angles",
    "__version__",
]
