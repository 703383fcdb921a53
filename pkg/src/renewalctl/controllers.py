"""Online decision rules for frame-based ratio control.

Every rule is a pure function of a model and the current queue state; ties
go to the lowest class index, then the lowest mode, then the smaller idle
time (for attribute models: the first action in enumeration order).
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .model import AttributeModel, TaskModel
from .queues import QueueBank


@dataclass(frozen=True)
class ControllerConfig:
    V: float = 1.0
    slack: float = 0.0
    weights: tuple | None = None
    power_budget: float | None = None
    rate_target: float | None = None
    tie_break: str = "lowest-index"

    def __post_init__(self):
        for name in ("V", "slack"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {val}")
        if self.weights is not None and any(w <= 0 for w in self.weights):
            raise ValueError("flow-control weights must be positive")
        if self.power_budget is not None and not self.power_budget > 0:
            raise ValueError("power budget must be positive")
        if self.tie_break != "lowest-index":
            raise ValueError(f"unsupported tie-break policy {self.tie_break!r}")

    def weight(self, n: int) -> float:
        return 1.0 if self.weights is None else float(self.weights[n - 1])


def _qvec(queues) -> np.ndarray:
    if isinstance(queues, QueueBank):
        return queues.values
    return np.asarray(queues, dtype=float).reshape(-1)


def _idle_endpoints(idle_max: float) -> tuple:
    return (0.0,) if idle_max == 0 else (0.0, idle_max)


# ---------------------------------------------------------------------------
# task scheduling with rate constraints

def idle_choice(model: TaskModel, c: int, m: int, q_c: float, cfg: ControllerConfig) -> float:
    """Idle time minimizing the per-frame ratio for a fixed ``(c, m)``.

    The ratio is monotone in ``I`` so only the endpoints matter: no idling
    when the numerator is non-positive, full idling otherwise.
    """
    if cfg.V * float(model.mean_energy[c - 1, m - 1]) - q_c <= 0:
        return 0.0
    return model.idle_max


def task_schedule_decision(model: TaskModel, queues, cfg: ControllerConfig) -> tuple:
    """Return ``(c, m, I)`` minimizing ``(V e_hat - Q_c) / (D_hat + I)``."""
    q = _qvec(queues)
    if q.shape[0] != model.num_classes:
        raise ValueError(f"expected {model.num_classes} queues, got {q.shape[0]}")
    V = cfg.V
    best = None
    best_val = math.inf
    for c in range(1, model.num_classes + 1):
        qc = float(q[c - 1])
        for m in range(1, model.num_modes + 1):
            e = float(model.mean_energy[c - 1, m - 1])
            idle = 0.0 if V * e - qc <= 0 else model.idle_max
            val = (V * e - qc) / (float(model.mean_duration[c - 1, m - 1]) + idle)
            if val < best_val:
                best_val = val
                best = (c, m, idle)
    return best


def task_attribute_model(model: TaskModel) -> AttributeModel:
    """Express the rate-constrained scheduler as a general attribute model.

    Actions are ``(c, m, I)`` with ``I`` at its two endpoints; attribute 0 is
    energy and attribute ``n`` is ``lambda_n * T - 1_n`` with bound 0.
    """
    n = model.num_classes
    lam = model.rates

    def actions(_w):
        return [(c, m, i) for c in range(1, n + 1) for m in model.modes for i in _idle_endpoints(model.idle_max)]

    def frame(_w, a):
        c, m, i = a
        return model.duration(c, m) + i

    def attrs(_w, a):
        c, m, i = a
        t = model.duration(c, m) + i
        return [model.energy(c, m, i)] + [lam[k] * t - (1.0 if k + 1 == c else 0.0) for k in range(n)]

    return AttributeModel.from_functions([None], [1.0], actions, frame, attrs, np.zeros(n))


# ---------------------------------------------------------------------------
# general attributes

def _num_terms(attr: AttributeModel, w: int, q: np.ndarray, V: float) -> np.ndarray:
    y = attr.attribute_means[w]
    return V * y[:, 0] + y[:, 1:] @ q


def general_ratio_decision(attr: AttributeModel, w: int, queues, cfg: ControllerConfig) -> int:
    """Index of the action minimizing ``(V y0 + sum_l Q_l y_l) / T`` for event ``w``."""
    q = _qvec(queues)
    ratio = _num_terms(attr, w, q, cfg.V) / attr.frame_mean[w]
    return int(np.argmin(ratio))


def has_constant_frame(attr: AttributeModel) -> bool:
    t0 = attr.frame_mean[0][0]
    return not any(np.any(np.abs(t - t0) > 1e-12 * max(1.0, abs(t0))) for t in attr.frame_mean)


def fixed_frame_decision(attr: AttributeModel, w: int, queues, cfg: ControllerConfig, check: bool = True) -> int:
    """Drift-plus-penalty rule for constant frame size: minimize ``V y0 + sum_l Q_l y_l``.

    ``check=False`` skips the constant-frame validation (callers in a loop
    validate once up front).
    """
    if check and not has_constant_frame(attr):
        raise ValueError("fixed-frame rule requires a constant expected frame size")
    q = _qvec(queues)
    return int(np.argmin(_num_terms(attr, w, q, cfg.V)))


class ThetaTracker:
    """Running ratio of cumulative penalty to cumulative frame time.

    With ``window`` set, only the last ``window`` frames are tracked.
    """

    def __init__(self, window: int | None = None):
        if window is not None and window < 1:
            raise ValueError("theta window must be at least one frame")
        self.window = window
        self.num = 0.0
        self.den = 0.0
        self.frames = 0
        self._buf = deque() if window else None

    @property
    def theta(self) -> float:
        return 0.0 if self.frames == 0 else self.num / self.den

    def update(self, y0: float, frame: float) -> float:
        self.num += y0
        self.den += frame
        self.frames += 1
        if self._buf is not None:
            self._buf.append((y0, frame))
            if len(self._buf) > self.window:
                old_y, old_t = self._buf.popleft()
                self.num -= old_y
                self.den -= old_t
                self.frames -= 1
        return self.theta


def algorithm2_decision(attr: AttributeModel, w: int, queues, theta, cfg: ControllerConfig) -> int:
    """Minimize ``V (y0 - theta T) + sum_l Q_l (y_l - c_l T)`` for event ``w``."""
    th = theta.theta if isinstance(theta, ThetaTracker) else float(theta)
    if not math.isfinite(th):
        raise ValueError("running ratio theta must be finite")
    q = _qvec(queues)
    t = attr.frame_mean[w]
    y = attr.attribute_means[w]
    obj = cfg.V * (y[:, 0] - th * t) + (y[:, 1:] - np.outer(t, attr.bounds)) @ q
    return int(np.argmin(obj))


@dataclass(frozen=True)
class RatioPolicy:
    """Deterministic per-event action choice and its ratio of expectations."""

    actions: tuple
    ratio: float
    iterations: int


def policy_ratio(attr: AttributeModel, queues, cfg: ControllerConfig, policy) -> float:
    """``E[V y0 + sum Q y] / E[T]`` of a deterministic policy (action index per event)."""
    q = _qvec(queues)
    num = 0.0
    den = 0.0
    for w, a in enumerate(policy):
        num += attr.probs[w] * float(_num_terms(attr, w, q, cfg.V)[a])
        den += attr.probs[w] * float(attr.frame_mean[w][a])
    return num / den


def algorithm1_policy(attr: AttributeModel, queues, cfg: ControllerConfig, tol: float = 1e-9,
                      max_iter: int = 200) -> RatioPolicy:
    """Policy minimizing the ratio of expectations over all event-reactive policies.

    Bisection on ``h`` where ``E_w[min_a (num - h T)]`` crosses zero. The
    bracket comes from the extreme per-pair ratios; after bisection a few
    parametric refinement steps snap to the exact optimal vertex.
    """
    if not tol > 0:
        raise ValueError("bisection tolerance must be positive")
    if not np.all(np.isfinite(attr.probs)):
        raise ValueError("event distribution must be finite")
    q = _qvec(queues)
    nums = [_num_terms(attr, w, q, cfg.V) for w in range(len(attr.events))]
    dens = attr.frame_mean
    probs = attr.probs

    def expected_min(h):
        return sum(p * float(np.min(n - h * d)) for p, n, d in zip(probs, nums, dens))

    def argmins(h):
        return tuple(int(np.argmin(n - h * d)) for n, d in zip(nums, dens))

    def ratio_of(pol):
        num = sum(p * float(n[a]) for p, n, a in zip(probs, nums, pol))
        den = sum(p * float(d[a]) for p, d, a in zip(probs, dens, pol))
        return num / den

    ratios = np.concatenate([n / d for n, d in zip(nums, dens)])
    lo, hi = float(ratios.min()), float(ratios.max())
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        if expected_min(mid) > 0:
            lo = mid
        else:
            hi = mid
        it += 1
    pol = argmins(hi)
    h = ratio_of(pol)
    for _ in range(50):
        nxt = argmins(h)
        h_next = ratio_of(nxt)
        if not h_next < h:
            break
        pol, h = nxt, h_next
    return RatioPolicy(actions=pol, ratio=h, iterations=it)


def exhaustive_policy_ratio(attr: AttributeModel, queues, cfg: ControllerConfig) -> float:
    """Best ratio over all deterministic event-reactive policies, by enumeration."""
    best = math.inf
    for pol in itertools.product(*[range(len(a)) for a in attr.actions]):
        best = min(best, policy_ratio(attr, queues, cfg, pol))
    return best


def unit_frame_transform(attr: AttributeModel) -> AttributeModel:
    """Fold ratio constraints into attributes on an effective unit frame.

    ``y_l`` becomes ``y_l - c_l T`` with bound 0 and every frame has size 1;
    the penalty attribute is unchanged.
    """
    t_new, y_new = [], []
    for t, y in zip(attr.frame_mean, attr.attribute_means):
        y2 = y.copy()
        y2[:, 1:] = y[:, 1:] - np.outer(t, attr.bounds)
        t_new.append(np.ones_like(t))
        y_new.append(y2)
    return AttributeModel(
        events=attr.events,
        probs=attr.probs,
        actions=attr.actions,
        frame_mean=tuple(t_new),
        attribute_means=tuple(y_new),
        bounds=np.zeros_like(attr.bounds),
        sampler=None,
    )


# ---------------------------------------------------------------------------
# random arrivals with flow control

def flow_control_decision(queues, cfg: ControllerConfig) -> np.ndarray:
    """Admit-all / admit-none per class: ``gamma_n = 1`` iff ``Q_n <= V w_n``."""
    q = _qvec(queues)
    return np.array([1 if q[n] <= cfg.V * cfg.weight(n + 1) else 0 for n in range(len(q))], dtype=np.int8)


def flow_task_decision(model: TaskModel, queues, z: float, cfg: ControllerConfig) -> tuple:
    """Return ``(c, m, I)`` minimizing ``(Z e_hat(c,m,I) - Q_c 1{c>0}) / (D_hat + I)``.

    ``c = 0`` (null) is offered only when the model allows it.
    """
    q = _qvec(queues)
    best = None
    best_val = math.inf
    first = 0 if model.allow_null else 1
    idles = _idle_endpoints(model.idle_max)
    for c in range(first, model.num_classes + 1):
        qc = 0.0 if c == 0 else float(q[c - 1])
        d = model.duration(c, 1) if c == 0 else None
        for m in range(1, model.num_modes + 1):
            if c != 0:
                d = float(model.mean_duration[c - 1, m - 1])
            for idle in idles:
                val = (z * model.energy(c, m, idle) - qc) / (d + idle)
                if val < best_val:
                    best_val = val
                    best = (c, m, idle)
    return best


# ---------------------------------------------------------------------------
# analysis constants

def drift_second_moment(model: TaskModel, rates, action) -> float:
    """``1/2 sum_n (lambda_n (D + I) - 1_n)^2`` for a deterministic action."""
    c, m, idle = action
    lam = np.asarray(rates, dtype=float)
    t = model.duration(c, m) + idle
    ind = np.zeros(len(lam))
    if c > 0:
        ind[c - 1] = 1.0
    return 0.5 * float(np.sum((lam * t - ind) ** 2))


def compute_drift_bound(model: TaskModel, rates) -> float:
    """Conservative drift constant ``1/2 sum_n max(lambda_n T_max, 1)^2``.

    Each term ``(lambda_n T - 1_n)`` lies in ``[-1, lambda_n T_max]``, so the
    bound holds under every policy. Raises for unbounded noise.
    """
    lam = np.asarray(rates, dtype=float)
    t_max = model.max_duration() + model.idle_max
    return 0.5 * float(np.sum(np.maximum(lam * t_max, 1.0) ** 2))


@dataclass(frozen=True)
class AnalysisConstants:
    B: float
    beta: float
    power_opt: float
    duration_min: float

    def power_bound(self, V: float) -> float:
        """Finite-horizon bound on running power (infinite for ``V = 0``)."""
        if V <= 0:
            return math.inf
        return self.power_opt + self.B / (V * self.duration_min)

    def gap_bound(self, V: float, frames: int) -> float:
        """Bound on ``||Q[K]|| / K`` and hence on every constraint gap."""
        return math.sqrt(2.0 * (self.B + V * self.beta) / frames)


def analysis_constants(model: TaskModel, power_opt: float, rates=None, slack: float = 0.0) -> AnalysisConstants:
    """Drift constant (plus any decision slack) and ``beta`` over the action grid."""
    lam = model.rates if rates is None else rates
    B = compute_drift_bound(model, lam) + slack
    beta = 0.0
    for c in range(1, model.num_classes + 1):
        for m in model.modes:
            for idle in _idle_endpoints(model.idle_max):
                t = model.duration(c, m) + idle
                beta = max(beta, abs(power_opt * t - model.energy(c, m, idle)))
    return AnalysisConstants(B=B, beta=beta, power_opt=power_opt, duration_min=model.duration_min)
