"""System descriptions: task classes and modes, attribute models, samplers.

Classes are numbered ``1..N`` and modes ``1..|M|`` at the public surface;
class ``0`` is the null choice (no task processed) where a model permits it.
Tables are stored 0-based as ``(N, |M|)`` float arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .rng import FrameRng

NOISE_KINDS = ("deterministic", "uniform", "exponential")


@dataclass(frozen=True)
class NoiseSpec:
    """Outcome distribution around the mean tables.

    ``uniform`` draws ``mean + U(-w, w)``; the half-width is clipped per entry
    so that ``D >= D_min`` and ``e >= 0`` hold without truncating (which would
    move the mean). ``exponential`` draws ``D_min + Exp(D_hat - D_min)`` and
    ``Exp(e_hat)``, which is unbounded.
    """

    kind: str = "deterministic"
    width: float = 0.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if not (math.isfinite(self.width) and self.width >= 0):
            raise ValueError(f"noise width must be finite and >= 0, got {self.width}")

    @property
    def code(self) -> int:
        return NOISE_KINDS.index(self.kind)

    @property
    def bounded(self) -> bool:
        return self.kind != "exponential"


@dataclass(frozen=True, eq=False)
class TaskModel:
    mean_energy: np.ndarray
    mean_duration: np.ndarray
    idle_max: float
    duration_min: float
    rates: np.ndarray
    noise: tuple = ()  # (N, |M|) nested tuple of NoiseSpec
    null_duration: float | None = None
    null_energy: float = 0.0
    allow_null: bool = False
    idle_power: float = 0.0

    @property
    def num_classes(self) -> int:
        return self.mean_energy.shape[0]

    @property
    def num_modes(self) -> int:
        return self.mean_energy.shape[1]

    @property
    def modes(self) -> tuple:
        return tuple(range(1, self.num_modes + 1))

    @property
    def null_busy(self) -> float:
        return self.duration_min if self.null_duration is None else self.null_duration

    def noise_at(self, c: int, m: int) -> NoiseSpec:
        return self.noise[c - 1][m - 1]

    def energy(self, c: int, m: int, idle: float = 0.0) -> float:
        """Expected frame energy for class ``c`` (0 = null), mode ``m``, idle time."""
        base = self.null_energy if c == 0 else float(self.mean_energy[c - 1, m - 1])
        return base + self.idle_power * idle

    def duration(self, c: int, m: int) -> float:
        return self.null_busy if c == 0 else float(self.mean_duration[c - 1, m - 1])

    def noise_tables(self):
        """Per-entry noise codes and clipped half-widths for the kernels."""
        n, k = self.mean_energy.shape
        kind = np.zeros((n, k), dtype=np.int32)
        wd = np.zeros((n, k))
        we = np.zeros((n, k))
        for i in range(n):
            for j in range(k):
                spec = self.noise[i][j]
                kind[i, j] = spec.code
                if spec.kind == "uniform":
                    wd[i, j] = min(spec.width, self.mean_duration[i, j] - self.duration_min)
                    we[i, j] = min(spec.width, self.mean_energy[i, j])
        return kind, wd, we

    def max_duration(self) -> float:
        """Worst-case busy duration; raises for unbounded noise."""
        kind, wd, _ = self.noise_tables()
        if np.any(kind == NOISE_KINDS.index("exponential")):
            raise ValueError("worst-case duration is unbounded under exponential noise")
        d = float(np.max(self.mean_duration + wd))
        if self.allow_null:
            d = max(d, self.null_busy)
        return d

    def max_energy(self) -> float:
        kind, _, we = self.noise_tables()
        if np.any(kind == NOISE_KINDS.index("exponential")):
            raise ValueError("worst-case energy is unbounded under exponential noise")
        e = float(np.max(self.mean_energy + we)) + self.idle_power * self.idle_max
        if self.allow_null:
            e = max(e, self.null_energy + self.idle_power * self.idle_max)
        return e


def _table(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty (classes x modes) table")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _noise_entry(s) -> NoiseSpec:
    if isinstance(s, NoiseSpec):
        return s
    if isinstance(s, str):
        return NoiseSpec(kind=s)
    return NoiseSpec(**s)


def _noise_grid(noise, shape) -> tuple:
    if noise is None:
        noise = NoiseSpec()
    if isinstance(noise, str):
        noise = NoiseSpec(kind=noise)
    if isinstance(noise, Mapping):
        noise = NoiseSpec(**noise)
    if isinstance(noise, NoiseSpec):
        return tuple(tuple(noise for _ in range(shape[1])) for _ in range(shape[0]))
    rows = []
    for row in noise:
        rows.append(tuple(_noise_entry(s) for s in row))
    if (len(rows), len(rows[0]) if rows else 0) != shape:
        raise ValueError(f"noise grid shape does not match tables {shape}")
    return tuple(rows)


def build_task_model(spec: Mapping[str, Any]) -> TaskModel:
    """Validate a scenario description and return a :class:`TaskModel`.

    Required keys are ``mean_energy`` and ``mean_duration`` (classes x modes
    tables). ``duration_min`` defaults to the smallest table duration.
    """
    try:
        e_hat = _table(spec["mean_energy"], "mean_energy")
        d_hat = _table(spec["mean_duration"], "mean_duration")
    except KeyError as exc:
        raise ValueError(f"model spec missing required key {exc.args[0]!r}") from None
    if e_hat.shape != d_hat.shape:
        raise ValueError(f"mean_energy shape {e_hat.shape} != mean_duration shape {d_hat.shape}")
    if e_hat.shape[1] == 0:
        raise ValueError("mode set is empty")
    if np.any(d_hat <= 0):
        raise ValueError("mean_duration entries must be positive")
    if np.any(e_hat < 0):
        raise ValueError("mean_energy entries must be non-negative")

    d_min = spec.get("duration_min")
    d_min = float(np.min(d_hat)) if d_min is None else float(d_min)
    if not d_min > 0:
        raise ValueError(f"duration_min must be positive, got {d_min}")
    if np.any(d_hat < d_min):
        raise ValueError("mean_duration has entries below duration_min")

    idle_max = float(spec.get("idle_max", 0.0))
    if not (math.isfinite(idle_max) and idle_max >= 0):
        raise ValueError(f"idle_max must be finite and >= 0, got {idle_max}")

    n = e_hat.shape[0]
    rates = np.asarray(spec.get("rates", np.zeros(n)), dtype=float).reshape(-1)
    if rates.shape != (n,):
        raise ValueError(f"rates must have one entry per class ({n}), got {rates.shape[0]}")
    if np.any(rates < 0) or not np.all(np.isfinite(rates)):
        raise ValueError("rates must be finite and non-negative")

    null_duration = spec.get("null_duration")
    if null_duration is not None:
        null_duration = float(null_duration)
        if null_duration < d_min:
            raise ValueError("null_duration must be at least duration_min")
    null_energy = float(spec.get("null_energy", 0.0))
    if null_energy < 0:
        raise ValueError("null_energy must be non-negative")

    e_hat.setflags(write=False)
    d_hat.setflags(write=False)
    rates.setflags(write=False)
    return TaskModel(
        mean_energy=e_hat,
        mean_duration=d_hat,
        idle_max=idle_max,
        duration_min=d_min,
        rates=rates,
        noise=_noise_grid(spec.get("noise"), e_hat.shape),
        null_duration=null_duration,
        null_energy=null_energy,
        allow_null=bool(spec.get("allow_null", False)),
        idle_power=float(spec.get("idle_power", 0.0)),
    )


@dataclass(frozen=True, eq=False)
class FrameOutcome:
    c: int
    m: int
    idle: float
    busy: float
    energy: float
    served: np.ndarray
    admitted: np.ndarray | None = None

    @property
    def frame_total(self) -> float:
        return self.busy + self.idle


def draw_busy_energy(d_hat, e_hat, kind, wd, we, d_min, rng):
    """Sample ``(D, e)`` for one frame; consumes 0 (deterministic) or 2 draws.

    Shared by :func:`sample_outcome` and the pure-Python kernel so both
    consume the stream identically to the compiled kernel.
    """
    if kind == 0:
        return d_hat, e_hat
    u1 = rng.uniform()
    u2 = rng.uniform()
    if kind == 1:
        return d_hat + wd * (2.0 * u1 - 1.0), e_hat + we * (2.0 * u2 - 1.0)
    return d_min + (d_hat - d_min) * -math.log(1.0 - u1), e_hat * -math.log(1.0 - u2)


def sample_outcome(model: TaskModel, action, rng: FrameRng) -> FrameOutcome:
    """Sample the busy time and energy of frame action ``(c, m, I)``."""
    c, m, idle = action
    n = model.num_classes
    served = np.zeros(n, dtype=np.int8)
    if c == 0:
        busy = model.null_busy
        energy = model.null_energy
    else:
        kind, wd, we = model.noise_tables()
        busy, energy = draw_busy_energy(
            float(model.mean_duration[c - 1, m - 1]),
            float(model.mean_energy[c - 1, m - 1]),
            int(kind[c - 1, m - 1]),
            float(wd[c - 1, m - 1]),
            float(we[c - 1, m - 1]),
            model.duration_min,
            rng,
        )
        served[c - 1] = 1
    energy = energy + model.idle_power * idle
    return FrameOutcome(c=c, m=m, idle=float(idle), busy=busy, energy=energy, served=served)


def frame_slots(frame_length: float) -> int:
    """Integer slot count used for per-slot arrivals (nearest, at least 1)."""
    return max(1, int(math.floor(frame_length + 0.5)))


def sample_arrivals(model: TaskModel, slots: int, gamma, rng: FrameRng, rates=None) -> np.ndarray:
    """Per-slot Bernoulli arrivals thinned by admit probabilities ``gamma``.

    Returns ``A_n ~ Binomial(slots, lambda_n * gamma_n)``. Draws are taken
    class by class, slot by slot, one uniform each.
    """
    lam = model.rates if rates is None else np.asarray(rates, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0) or np.any(gamma > 1):
        raise ValueError("admit probabilities must lie in [0, 1]")
    p = lam * gamma
    if np.any(p > 1):
        raise ValueError("per-slot admit probability lambda*gamma exceeds 1")
    if slots < 1:
        raise ValueError("frame must contain at least one slot")
    u = rng.uniforms(len(p) * slots).reshape(len(p), slots)
    return (u < p[:, np.newaxis]).sum(axis=1).astype(np.int64)


@dataclass(frozen=True, eq=False)
class AttributeModel:
    """Enumerated event/action model with expectation tables.

    ``frame_mean[w]`` has shape ``(A_w,)`` and ``attribute_means[w]`` has
    shape ``(A_w, L + 1)``; column 0 is the penalty attribute. ``sampler``
    optionally draws realized ``(T, y)`` given event and action indices;
    without it outcomes equal their means.
    """

    events: tuple
    probs: np.ndarray
    actions: tuple
    frame_mean: tuple
    attribute_means: tuple
    bounds: np.ndarray
    sampler: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if len(self.events) == 0 or probs.shape != (len(self.events),):
            raise ValueError("event space must be non-empty with one probability per event")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"event probabilities must sum to 1, got {probs.sum()!r}")
        L = len(self.bounds)
        for w, (acts, t, y) in enumerate(zip(self.actions, self.frame_mean, self.attribute_means)):
            if len(acts) == 0:
                raise ValueError(f"event {self.events[w]!r} has an empty action set")
            if t.shape != (len(acts),) or y.shape != (len(acts), L + 1):
                raise ValueError(f"table shapes for event {self.events[w]!r} do not match its actions")
            if np.any(t <= 0):
                raise ValueError("frame_mean must be positive for every (event, action)")

    @property
    def num_constraints(self) -> int:
        return len(self.bounds)

    @property
    def frame_min(self) -> float:
        return float(min(t.min() for t in self.frame_mean))

    @property
    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)

    @classmethod
    def from_functions(cls, events: Sequence, probs, action_space: Callable, frame_mean: Callable,
                       attribute_means: Callable, bounds, sampler=None) -> "AttributeModel":
        """Enumerate ``action_space(w)`` and tabulate ``frame_mean(w, a)`` and
        ``attribute_means(w, a)`` (a length ``L + 1`` sequence)."""
        events = tuple(events)
        actions, tabs_t, tabs_y = [], [], []
        for w in events:
            acts = tuple(action_space(w))
            actions.append(acts)
            tabs_t.append(np.array([frame_mean(w, a) for a in acts], dtype=float))
            tabs_y.append(np.array([attribute_means(w, a) for a in acts], dtype=float).reshape(len(acts), -1))
        return cls(
            events=events,
            probs=np.asarray(probs, dtype=float),
            actions=tuple(actions),
            frame_mean=tuple(tabs_t),
            attribute_means=tuple(tabs_y),
            bounds=np.asarray(bounds, dtype=float).reshape(-1),
            sampler=sampler,
        )

    def sample_event(self, rng: FrameRng) -> int:
        return rng.categorical(self.cdf)

    def sample(self, w: int, a: int, rng: FrameRng):
        if self.sampler is None:
            return float(self.frame_mean[w][a]), self.attribute_means[w][a]
        return self.sampler(w, a, rng)
