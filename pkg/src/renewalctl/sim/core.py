"""Scenario, trace and summary records."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from ..lfp import ConstrainedLfpInstance
from ..model import AttributeModel, TaskModel

TASK_KINDS = ("task_scheduler", "flow_control")
ATTRIBUTE_KINDS = ("general_ratio", "algorithm1", "algorithm2", "fixed_frame")
KINDS = TASK_KINDS + ATTRIBUTE_KINDS + ("online_lfp",)

# every frame recorded up to this horizon, strided above it
FULL_TRACE_FRAMES = 10_000


@dataclass
class Scenario:
    name: str
    kind: str
    model: Any  # TaskModel | AttributeModel | ConstrainedLfpInstance
    V: float = 1.0
    horizon: int = 1_000_000
    seed: int = 1
    weights: tuple | None = None
    power_budget: float | None = None
    rate_schedule: tuple = ()  # ((start_frame, rate multiplier), ...)
    moving_window: int = 10_000
    q0: tuple | None = None
    z0: float = 0.0
    theta_window: int | None = None
    trace_stride: int | None = None
    description: str = ""
    params: dict = field(default_factory=dict)  # scenario constants echoed into summaries

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown controller kind {self.kind!r}; expected one of {KINDS}")
        if int(self.horizon) < 1:
            raise ValueError("horizon must be at least one frame")
        self.horizon = int(self.horizon)
        if self.V < 0 or not np.isfinite(self.V):
            raise ValueError(f"V must be finite and non-negative, got {self.V}")
        starts = [int(s) for s, _ in self.rate_schedule]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("rate_schedule start frames must be strictly increasing")
        if any(m < 0 for _, m in self.rate_schedule):
            raise ValueError("rate multipliers must be non-negative")
        if self.moving_window < 1:
            raise ValueError("moving_window must be at least 1")
        expected = {"task_scheduler": TaskModel, "flow_control": TaskModel, "online_lfp": ConstrainedLfpInstance}
        want = expected.get(self.kind, AttributeModel)
        if not isinstance(self.model, want):
            raise TypeError(f"{self.kind} scenarios need a {want.__name__}, got {type(self.model).__name__}")
        if self.kind == "flow_control" and self.power_budget is None:
            raise ValueError("flow_control scenarios need a power_budget")

    @property
    def num_queues(self) -> int:
        if isinstance(self.model, TaskModel):
            return self.model.num_classes
        if isinstance(self.model, AttributeModel):
            return self.model.num_constraints
        return len(self.model.d)

    @property
    def stride(self) -> int:
        if self.trace_stride is not None:
            return max(1, int(self.trace_stride))
        if self.horizon <= FULL_TRACE_FRAMES:
            return 1
        return -(-self.horizon // FULL_TRACE_FRAMES)

    def phases(self) -> tuple:
        """``(starts, multipliers)`` with an implicit unit phase at frame 0."""
        sched = [(int(s), float(m)) for s, m in self.rate_schedule]
        if not sched or sched[0][0] > 0:
            sched.insert(0, (0, 1.0))
        return np.array([s for s, _ in sched], dtype=np.int64), np.array([m for _, m in sched])


def trace_columns(n: int) -> list:
    return (["k", "c", "m", "I", "D", "e", "T"] + [f"Q_{i}" for i in range(1, n + 1)]
            + ["Z", "theta", "running_power"] + [f"running_rate_{i}" for i in range(1, n + 1)])


@dataclass(eq=False)
class FrameTrace:
    """Sampled per-frame records; one row per recorded frame, state after update."""

    columns: list
    data: np.ndarray
    stride: int = 1
    extra: dict = field(default_factory=dict)  # per-row derived columns

    def __len__(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]


@dataclass(eq=False)
class RunSummary:
    """Frame averages and constraint diagnostics of one run.

    For attribute and online-LFP scenarios ``avg_energy`` is the mean penalty
    attribute per frame and ``power`` its time-average ratio.
    """

    scenario: str
    kind: str
    V: float
    seed: int
    frames: int
    backend: str
    avg_energy: float
    avg_busy: float
    avg_idle: float
    avg_frame: float
    power: float
    served_frac: list
    admitted_avg: list
    rates: list
    gaps: list
    violations: list
    q_max: list
    q_final: list
    extras: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec = asdict(self)
        rec = {k: _plain(v) for k, v in rec.items()}
        return rec


def _plain(v):
    if isinstance(v, dict):
        return {k: _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v
