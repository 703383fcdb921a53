"""Built-in scenario catalog.

Each entry is a factory taking a horizon, so schedules expressed in
fractions of the run (the three-phase rate switch) scale with it.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np

from ..controllers import task_attribute_model
from ..lfp import ConstrainedLfpInstance
from ..model import AttributeModel, build_task_model
from .core import Scenario

RHO = 0.8
TASK_HORIZON = 1_000_000
ATTRIBUTE_HORIZON = 100_000
ALGORITHM1_HORIZON = 10_000
GRID_POINTS = 101


def one_class_spec(rate: float = 0.2, noise=None) -> dict:
    spec = {"mean_energy": [[1.0, 3.0]], "mean_duration": [[7.0, 4.0]], "idle_max": 10.0, "rates": [rate]}
    if noise is not None:
        spec["noise"] = noise
    return spec


def ten_class_spec(rho: float = RHO, allow_null: bool = False) -> dict:
    cls = range(1, 11)
    spec = {
        "mean_energy": [[float(i), 2.0 * i] for i in cls],
        "mean_duration": [[5.0 * i, 3.0 * i] for i in cls],
        "idle_max": 10.0,
        "rates": [rho / (30.0 * i) for i in cls],
    }
    if allow_null:
        spec.update(allow_null=True, null_energy=0.0)
    return spec


# ---------------------------------------------------------------------------
# attribute models

def opportunistic_model(p_max: float = 4.0, points: int = GRID_POINTS) -> AttributeModel:
    """Unit slots; event (A, S) of arrivals and channel gain; action power p.

    ``y0 = p``, ``y1 = A - log(1 + S p)`` with bound 0.
    """
    arrivals = [(0.0, 0.4), (1.0, 0.4), (2.0, 0.2)]
    channels = [(0.5, 0.3), (1.0, 0.4), (2.0, 0.3)]
    events = [(a, s) for a, _ in arrivals for s, _ in channels]
    probs = [pa * ps for _, pa in arrivals for _, ps in channels]
    grid = tuple(np.linspace(0.0, p_max, points))
    return AttributeModel.from_functions(
        events, probs, lambda w: grid, lambda w, p: 1.0,
        lambda w, p: [p, w[0] - math.log1p(w[1] * p)], [0.0])


def energy_price_service(e: float) -> float:
    return 2.0 * math.log1p(e)


def energy_price_model(e_max: float = 3.0, points: int = GRID_POINTS) -> AttributeModel:
    """Unit slots; event (S, phi, psi) of task size, outsourcing and energy prices.

    Action ``(gamma, e)``: ``y0 = phi (1 - gamma) S + psi e``,
    ``y1 = gamma S - mu(e)`` with bound 0. Admission is listed first.
    """
    sizes = [(0.0, 0.2), (1.0, 0.5), (2.0, 0.3)]
    out_prices = [(1.0, 0.5), (3.0, 0.5)]
    energy_prices = [(0.5, 0.6), (2.0, 0.4)]
    events, probs = [], []
    for s, ps in sizes:
        for phi, pp in out_prices:
            for psi, pq in energy_prices:
                events.append((s, phi, psi))
                probs.append(ps * pp * pq)
    grid = tuple(np.linspace(0.0, e_max, points))
    actions = tuple((g, e) for g in (1, 0) for e in grid)
    return AttributeModel.from_functions(
        events, probs, lambda w: actions, lambda w, a: 1.0,
        lambda w, a: [w[1] * (1 - a[0]) * w[0] + w[2] * a[1], a[0] * w[0] - energy_price_service(a[1])], [0.0])


def energy_price_rules(V: float, Q: float, event, e_max: float = 3.0, points: int = GRID_POINTS) -> tuple:
    """Separated decisions: admit iff ``Q <= V phi`` (or nothing arrives),
    energy ``argmin_e V psi e - Q mu(e)`` on the grid."""
    s, phi, psi = event
    gamma = 1 if (s == 0 or Q <= V * phi) else 0
    grid = np.linspace(0.0, e_max, points)
    vals = [V * psi * e - Q * energy_price_service(e) for e in grid]
    return gamma, float(grid[int(np.argmin(vals))])


# meta-data type -> modes (D_comp, e_comp, quality, bits)
SMART_MODES = {
    0: [(1.0, 0.5, 1.0, 2.0), (2.0, 1.5, 2.0, 1.0)],
    1: [(1.0, 0.5, 0.5, 4.0), (2.0, 1.0, 1.5, 2.0), (3.0, 2.5, 3.0, 1.0)],
}
SMART_CHANNELS = [(4.0, 0.7), (1.0, 0.3)]  # (bit rate, probability)
SMART_META = [(0, 0.6), (1, 0.4)]
SMART_SPEEDS = (1.0, 2.0)


def smart_device_model(read_time: float = 0.5, period: float = 2.8, p_av: float = 0.5) -> AttributeModel:
    """Coupled computation and transmission with meta-data and channel state.

    Event ``(beta, r)``, action ``(m, g)``; frame ``d + D_comp + bits / (r s_g)``.
    Attributes ``-q``, ``T - 1/lambda`` (``period = 1/lambda``) and
    ``e_comp + e_tran - P_av T``, all with bound 0.
    """
    events = [(b, r) for b, _ in SMART_META for r, _ in SMART_CHANNELS]
    probs = [pb * pr for _, pb in SMART_META for _, pr in SMART_CHANNELS]

    def actions(w):
        return [(m, g) for m in range(len(SMART_MODES[w[0]])) for g in range(len(SMART_SPEEDS))]

    def parts(w, a):
        d_comp, e_comp, qual, bits = SMART_MODES[w[0]][a[0]]
        speed = SMART_SPEEDS[a[1]]
        d_tran = bits / (w[1] * speed)
        e_tran = 0.5 * bits * speed / w[1]
        return read_time + d_comp + d_tran, e_comp + e_tran, qual

    def frame(w, a):
        return parts(w, a)[0]

    def attrs(w, a):
        t, e, qual = parts(w, a)
        return [-qual, t - period, e - p_av * t]

    return AttributeModel.from_functions(events, probs, actions, frame, attrs, [0.0, 0.0])


ONLINE_LFP_INSTANCE = {
    "a": [1.0, -3.0, -2.0, -1.0, 0.5],
    "b": [1.0, 1.0, 0.5, 0.5, 0.0],
    "C": [[1.0, 1.0, 0.0, 1.0], [1.0, -1.0, 1.0, 0.0]],
    "d": [1.2, 0.8],
}


def lfp_instance(spec: dict) -> ConstrainedLfpInstance:
    return ConstrainedLfpInstance(a=spec["a"], b=spec["b"], C=spec["C"], d=spec["d"])


# ---------------------------------------------------------------------------
# catalog

def _task(name, spec, V, horizon, desc, **kw):
    return Scenario(name=name, kind="task_scheduler", model=build_task_model(spec), V=V,
                    horizon=horizon, description=desc, **kw)


def _flow(name, spec, V, horizon, desc, **kw):
    n = len(spec["rates"])
    return Scenario(name=name, kind="flow_control", model=build_task_model(spec), V=V, horizon=horizon,
                    weights=(1.0,) * n, power_budget=0.5, description=desc, **kw)


def _rate_switch(horizon):
    third = max(1, horizon // 3)
    return _flow("rate_switch", ten_class_spec(), 100.0, horizon,
                 "ten-class flow control, loads 0.8 / 1.6 / 0.8 over three equal phases",
                 rate_schedule=((0, 1.0), (third, 2.0), (max(2 * third, third + 1), 1.0)))


CATALOG: dict[str, tuple[Callable[[int], Scenario], int]] = {
    "one_class": (lambda K: _task("one_class", one_class_spec(), 1.0, K,
                                  "one class, two modes, rate constraint 0.2"), TASK_HORIZON),
    "one_class_unconstrained": (lambda K: _task("one_class_unconstrained", one_class_spec(0.0), 1.0, K,
                                                "one class, two modes, no rate constraint"), TASK_HORIZON),
    "one_class_noisy": (lambda K: _task("one_class_noisy", one_class_spec(noise={"kind": "uniform", "width": 1.0}),
                                        1.0, K, "one class with uniform +-1 outcome noise"), TASK_HORIZON),
    "ten_class": (lambda K: _task("ten_class", ten_class_spec(), 1.0, K,
                                  "ten classes, two modes, rates 0.8/(30 i)"), TASK_HORIZON),
    "flow_control_ten_class": (lambda K: _flow("flow_control_ten_class", ten_class_spec(), 100.0, K,
                                               "ten-class flow control, no null class, P_av 0.5"), TASK_HORIZON),
    "flow_control_null": (lambda K: _flow("flow_control_null", ten_class_spec(allow_null=True), 100.0, K,
                                          "ten-class flow control with a zero-energy null class",
                                          params={"e_min": 1.0, "e_max": 20.0}), TASK_HORIZON),
    "rate_switch": (_rate_switch, TASK_HORIZON),
    "one_class_attribute": (lambda K: Scenario(
        name="one_class_attribute", kind="general_ratio",
        model=task_attribute_model(build_task_model(one_class_spec())), V=1.0, horizon=K,
        description="one-class scheduler expressed as a general attribute model"), ATTRIBUTE_HORIZON),
    "opportunistic": (lambda K: Scenario(
        name="opportunistic", kind="fixed_frame", model=opportunistic_model(), V=10.0, horizon=K,
        description="minimum average power subject to queue stability over fading channels",
        params={"p_max": 4.0, "grid_points": GRID_POINTS}), ATTRIBUTE_HORIZON),
    "energy_price": (lambda K: Scenario(
        name="energy_price", kind="fixed_frame", model=energy_price_model(), V=10.0, horizon=K,
        description="outsourcing versus purchasing energy under random prices",
        params={"e_max": 3.0, "grid_points": GRID_POINTS}), ATTRIBUTE_HORIZON),
    "smart_device": (lambda K: Scenario(
        name="smart_device", kind="algorithm2", model=smart_device_model(), V=20.0, horizon=K,
        description="joint computation and transmission, running-ratio rule",
        params={"read_time": 0.5, "period": 2.8, "power_budget": 0.5}), ATTRIBUTE_HORIZON),
    "smart_device_alg1": (lambda K: Scenario(
        name="smart_device_alg1", kind="algorithm1", model=smart_device_model(), V=20.0, horizon=K,
        description="joint computation and transmission, bisection ratio rule",
        params={"read_time": 0.5, "period": 2.8, "power_budget": 0.5}), ALGORITHM1_HORIZON),
    "online_lfp": (lambda K: Scenario(
        name="online_lfp", kind="online_lfp", model=lfp_instance(ONLINE_LFP_INSTANCE), V=1000.0, horizon=K,
        description="online drift-plus-penalty ratio rule for a constrained LFP",
        params={"instance": ONLINE_LFP_INSTANCE}), TASK_HORIZON),
}


def scenario_names() -> list:
    return list(CATALOG)


def get_scenario(name: str, horizon: int | None = None, **overrides) -> Scenario:
    """Catalog scenario with optional horizon, V, seed or other field overrides."""
    if name not in CATALOG:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(CATALOG)}")
    factory, default = CATALOG[name]
    s = factory(default if horizon is None else int(horizon))
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(s, **overrides) if overrides else s


def default_horizon(name: str) -> int:
    return CATALOG[name][1]


def builtin_scenarios() -> dict:
    """Every catalog scenario at its default horizon."""
    return {name: get_scenario(name) for name in CATALOG}
