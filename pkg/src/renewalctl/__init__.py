"""Ratio-of-averages control for renewal systems with virtual queues."""

from .controllers import ControllerConfig
from .kernels import BACKEND
from .model import AttributeModel, NoiseSpec, TaskModel, build_task_model
from .queues import QueueBank, VirtualQueue
from .rng import FrameRng

__all__ = [
    "BACKEND", "AttributeModel", "ControllerConfig", "FrameRng", "NoiseSpec",
    "QueueBank", "TaskModel", "VirtualQueue", "build_task_model",
]
__version__ = "0.1.0"
