"""Virtual queues, the clamped update, and Lyapunov diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class VirtualQueue:
    value: float = 0.0
    label: str = ""


def clamp_update(q: float, arrival: float, service: float) -> float:
    # (q + arrival) - service, in this order; kernels and fallback rely on it
    return max(q + arrival - service, 0.0)


def queue_update(q: VirtualQueue, arrival: float, service: float) -> VirtualQueue:
    """Return ``q`` advanced by one frame: ``max(Q + arrival - service, 0)``."""
    if not (math.isfinite(arrival) and math.isfinite(service)):
        raise ValueError(f"queue {q.label!r}: non-finite increment ({arrival}, {service})")
    return replace(q, value=clamp_update(q.value, arrival, service))


class QueueBank:
    """Ordered virtual queues owned by a single run.

    Cumulative arrival and service totals are always kept (they back the
    constraint-gap certificate); per-frame increments are stored only when
    ``keep_history`` is set.
    """

    def __init__(self, labels: Sequence[str], initial=None, keep_history: bool = False):
        self.labels = tuple(labels)
        n = len(self.labels)
        init = np.zeros(n) if initial is None else np.asarray(initial, dtype=float).reshape(-1).copy()
        if init.shape != (n,):
            raise ValueError(f"initial backlog needs {n} entries, got {init.shape[0]}")
        if np.any(init < 0):
            raise ValueError("initial backlog must be non-negative")
        self.initial = init
        self.values = init.copy()
        self.frames = 0
        self.total_arrival = np.zeros(n)
        self.total_service = np.zeros(n)
        self.max_values = init.copy()
        self.keep_history = keep_history
        self.history: list = []

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, i: int) -> VirtualQueue:
        return VirtualQueue(float(self.values[i]), self.labels[i])

    def queues(self) -> list:
        return [self[i] for i in range(len(self))]

    def update(self, arrivals, services) -> float:
        """Advance every queue one frame; return the Lyapunov drift of the frame."""
        arrivals = np.asarray(arrivals, dtype=float)
        services = np.asarray(services, dtype=float)
        if not (np.all(np.isfinite(arrivals)) and np.all(np.isfinite(services))):
            raise ValueError("non-finite queue increment")
        before = lyapunov(self)
        for i in range(len(self.values)):
            self.values[i] = clamp_update(float(self.values[i]), float(arrivals[i]), float(services[i]))
        self.total_arrival += arrivals
        self.total_service += services
        np.maximum(self.max_values, self.values, out=self.max_values)
        self.frames += 1
        if self.keep_history:
            self.history.append((arrivals.copy(), services.copy()))
        return lyapunov(self) - before

    def gaps(self) -> np.ndarray:
        return np.array([constraint_gap(self.values[i], self.frames, self.initial[i]) for i in range(len(self))])

    def running_violation(self) -> np.ndarray:
        """``(1/K) * sum(arrival - service)`` per queue over the frames so far."""
        if self.frames == 0:
            raise ValueError("no frames elapsed")
        return (self.total_arrival - self.total_service) / self.frames


def lyapunov(bank) -> float:
    """Half the sum of squared backlogs."""
    values = bank.values if isinstance(bank, QueueBank) else np.asarray(bank, dtype=float)
    return 0.5 * float(np.dot(values, values))


def constraint_gap(q_final: float, frames: int, q_initial: float = 0.0) -> float:
    """``(Q[K] - Q[0]) / K``: upper bound on the running constraint violation."""
    if isinstance(q_final, VirtualQueue):
        q_final = q_final.value
    if frames < 1:
        raise ValueError("constraint gap needs at least one elapsed frame")
    return (q_final - q_initial) / frames
