import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_box, brute_task_decision
from renewalctl import ControllerConfig, QueueBank, build_task_model
from renewalctl.controllers import task_schedule_decision
from renewalctl.lfp import BoxLfpInstance, solve_box_lfp
from renewalctl.queues import clamp_update
from renewalctl.sim.metrics import moving_average, time_average_ratio
from renewalctl.sim.scenarios import ten_class_spec

finite = st.floats(-1e3, 1e3, allow_nan=False)
nonneg = st.floats(0.0, 1e3, allow_nan=False)
TEN = build_task_model(ten_class_spec())


@given(st.lists(st.tuples(nonneg, nonneg), min_size=1, max_size=200), nonneg)
def test_queue_never_negative_and_gap_certificate(increments, q0):
    bank = QueueBank(["q"], initial=[q0])
    for a, s in increments:
        bank.update([a], [s])
        assert bank.values[0] >= 0.0
    # running violation <= (Q[K] - Q[0]) / K up to rounding of the sums
    scale = 1.0 + sum(a + s for a, s in increments) / len(increments) + q0
    assert bank.running_violation()[0] <= bank.gaps()[0] + 1e-12 * scale


@given(nonneg, finite, finite)
def test_clamp_is_max(q, a, s):
    assert clamp_update(q, a, s) == max(q + a - s, 0.0)


@st.composite
def box_instances(draw):
    m = draw(st.integers(0, 8))
    phi = draw(st.lists(st.floats(-10, 10), min_size=m + 1, max_size=m + 1))
    b0 = draw(st.floats(0.1, 10))
    bs = draw(st.lists(st.one_of(st.just(0.0), st.floats(0.0, 10)), min_size=m, max_size=m))
    return BoxLfpInstance(phi, [b0] + bs)


@given(box_instances())
def test_greedy_equals_brute_force(inst):
    sol = solve_box_lfp(inst)
    assert sol.value == pytest.approx(brute_box(inst.phi, inst.b), abs=1e-9)
    assert np.all((sol.x == 0) | (sol.x == 1))
    for j in range(inst.size):
        if inst.b[j + 1] == 0:
            assert sol.x[j] == (1.0 if inst.phi[j + 1] < 0 else 0.0)


@given(st.lists(st.floats(0.0, 50.0), min_size=10, max_size=10), st.floats(0.0, 5.0))
@settings(max_examples=200)
def test_task_decision_is_grid_optimal(q, V):
    q = np.array(q)
    c, m, idle = task_schedule_decision(TEN, q, ControllerConfig(V=V))
    val = (V * TEN.mean_energy[c - 1, m - 1] - q[c - 1]) / (TEN.mean_duration[c - 1, m - 1] + idle)
    best = brute_task_decision(TEN.mean_energy, TEN.mean_duration, TEN.idle_max, q, V, idle_points=11)
    assert val <= best[0] + 1e-12 * (1 + abs(best[0]))


@given(st.lists(st.floats(0, 10), min_size=1, max_size=50), st.floats(0.1, 5))
def test_time_average_scale_invariant(num, k):
    den = [1.0 + x for x in num]
    assert time_average_ratio([k * x for x in num], [k * d for d in den]) == pytest.approx(
        time_average_ratio(num, den), rel=1e-12, abs=1e-15)


@given(st.floats(-100, 100), st.integers(1, 30), st.integers(1, 100))
def test_moving_average_of_constant(c, window, n):
    ma = moving_average(np.full(n, c), window)
    assert np.allclose(ma, c, atol=1e-12 * (1 + abs(c)))


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=8), st.lists(st.floats(0.1, 5), min_size=1, max_size=8),
       st.lists(st.floats(0, 1), min_size=1, max_size=8))
def test_single_mixture_ratio_bound(a, b, w):
    k = min(len(a), len(b), len(w))
    a, b, w = np.array(a[:k]), np.array(b[:k]), np.array(w[:k])
    if w.sum() == 0:
        w = np.ones(k)
    p = w / w.sum()
    assert (p @ a) / (p @ b) >= np.min(a / b) - 1e-12 * (1 + np.max(np.abs(a / b)))
    assert math.isfinite((p @ a) / (p @ b))
