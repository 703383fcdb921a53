import math

import numpy as np
import pytest

from oracles import (
    best_deterministic_one_class, brute_box, highs_attribute_optimum, exact_one_class_optimum, highs_lfp, highs_stationary_optimum,
    ten_class_tables,
)
from renewalctl import build_task_model
from renewalctl.controllers import exhaustive_policy_ratio, ControllerConfig
from renewalctl.lfp import (
    BoxLfpInstance, ConstrainedLfpInstance, InfeasibleProblem, attribute_drift_bound, attribute_optimum,
    brute_force_box_lfp, charnes_cooper_solve, dinkelbach_solve, is_feasible, online_lfp_drift_bound,
    random_feasible_instance, solve_box_lfp, stationary_lfp_instance, stationary_policy_optimum,
)
from renewalctl.model import AttributeModel
from renewalctl.sim.scenarios import ONLINE_LFP_INSTANCE, lfp_instance, smart_device_model


def random_box(rng, max_M=12):
    m = int(rng.integers(0, max_M + 1))
    phi = rng.uniform(-10, 10, m + 1)
    b = np.concatenate([[rng.uniform(0.1, 10)], rng.uniform(0, 10, m) * (rng.random(m) > 0.2)])
    return BoxLfpInstance(phi, b)


# ---------------------------------------------------------------------------
# box LFP

def test_box_examples():
    assert solve_box_lfp(BoxLfpInstance([3.0], [2.0])).value == 1.5
    sol = solve_box_lfp(BoxLfpInstance([1.0, -1.0, 1.0], [1.0, 0.0, 1.0]))
    assert sol.x.tolist() == [1.0, 0.0]
    assert sol.value == 0.0
    assert brute_box([1.0, -1.0, 1.0], [1.0, 0.0, 1.0]) == 0.0
    sol = solve_box_lfp(BoxLfpInstance([4.0, 1.0], [1.0, 1.0]))
    assert sol.x.tolist() == [1.0]
    assert sol.value == 2.5


def test_box_validation():
    with pytest.raises(ValueError, match="b0"):
        BoxLfpInstance([1.0], [0.0])
    with pytest.raises(ValueError, match="non-negative"):
        BoxLfpInstance([1.0, 1.0], [1.0, -1.0])
    with pytest.raises(ValueError, match="same length"):
        BoxLfpInstance([1.0, 1.0], [1.0])


def test_brute_force_examples():
    tie = brute_force_box_lfp(BoxLfpInstance([1.0, 0.0], [1.0, 0.0]))
    assert tie.x.tolist() == [0.0]
    assert brute_force_box_lfp(BoxLfpInstance([2.0], [4.0])).value == 0.5
    with pytest.raises(ValueError, match="M <= 3"):
        brute_force_box_lfp(BoxLfpInstance(np.ones(5), np.ones(5)), max_M=3)


def test_greedy_matches_brute_force_and_certificate(rng):
    for _ in range(2000):
        inst = random_box(rng, max_M=10)
        sol = solve_box_lfp(inst)
        assert sol.value == pytest.approx(brute_force_box_lfp(inst).value, abs=1e-9)
        assert sol.value == pytest.approx(inst.ratio(sol.x), abs=1e-12)
        for j in range(inst.size):
            bj, pj = inst.b[j + 1], inst.phi[j + 1]
            if bj > 0:
                if sol.x[j] == 1.0:
                    assert pj / bj < sol.value + 1e-9
                else:
                    assert pj / bj >= sol.value - 1e-9


# ---------------------------------------------------------------------------
# stationary optimum

def test_one_class_optimum_exact(one_class):
    exact, p1, idle = exact_one_class_optimum()
    opt = stationary_policy_optimum(one_class).raise_for_status()
    assert opt.power_opt == pytest.approx(float(exact), abs=1e-12)
    assert opt.probs[0] == pytest.approx([float(p1), 1 - float(p1)], abs=1e-12)
    assert opt.idle == pytest.approx(float(idle), abs=1e-12)


def test_unconstrained_optimum(one_class_free):
    opt = stationary_policy_optimum(one_class_free)
    assert opt.power_opt == pytest.approx(1 / 17, abs=1e-12)
    assert opt.probs[0].tolist() == [1.0, 0.0]
    assert opt.idle == 10.0


def test_ten_class_optimum_two_oracles(ten_class):
    opt = stationary_policy_optimum(ten_class)
    e, d, lam = ten_class_tables()
    ref, _, _ = highs_stationary_optimum(e, d, lam, 10.0)
    assert opt.power_opt == pytest.approx(ref, abs=1e-9)
    dk = dinkelbach_solve(stationary_lfp_instance(ten_class))
    assert dk.value == pytest.approx(opt.power_opt, abs=1e-9)
    assert np.all(opt.probs.sum(axis=1) >= ten_class.rates * (opt.probs.ravel() @ d.ravel() + opt.idle) - 1e-9)


def test_infeasible_rates(one_class):
    opt = stationary_policy_optimum(one_class, rates=[0.3])
    assert opt.status == "infeasible"
    with pytest.raises(InfeasibleProblem):
        opt.raise_for_status()


def test_random_task_models_match_highs(rng):
    for _ in range(40):
        n, k = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        e = rng.uniform(0.1, 5, (n, k))
        d = rng.uniform(1, 6, (n, k))
        lam = rng.uniform(0, 0.6 / n, n) / d.max()
        idle = float(rng.uniform(0, 10))
        m = build_task_model({"mean_energy": e, "mean_duration": d, "idle_max": idle, "rates": lam})
        ours = stationary_policy_optimum(m)
        ref, _, _ = highs_stationary_optimum(e, d, lam, idle)
        assert ours.power_opt == pytest.approx(ref, abs=1e-9)
        assert dinkelbach_solve(stationary_lfp_instance(m)).value == pytest.approx(ref, abs=1e-7)


def test_randomization_necessity(one_class):
    det = best_deterministic_one_class(0.2)
    assert det == pytest.approx(0.6, abs=1e-12)
    assert stationary_policy_optimum(one_class).power_opt < det - 0.1


# ---------------------------------------------------------------------------
# constrained LFP

def test_dinkelbach_one_class(one_class):
    sol = dinkelbach_solve(stationary_lfp_instance(one_class))
    assert sol.value == pytest.approx(7 / 15, abs=1e-9)


def test_single_feasible_point():
    # x1 <= 0.5 and -x1 <= -0.5 pin x1 = 0.5
    inst = ConstrainedLfpInstance(a=[1.0, 2.0], b=[1.0, 1.0], C=[[1.0], [-1.0]], d=[0.5, -0.5])
    for solver in (dinkelbach_solve, charnes_cooper_solve):
        sol = solver(inst)
        assert sol.x == pytest.approx([0.5])
        assert sol.value == pytest.approx(2.0 / 1.5, abs=1e-12)


def test_infeasible_constrained():
    inst = ConstrainedLfpInstance(a=[1.0, 1.0], b=[1.0, 1.0], C=[[1.0], [-1.0]], d=[0.2, -0.5])
    assert dinkelbach_solve(inst).status == "infeasible"
    assert charnes_cooper_solve(inst).status == "infeasible"
    assert not is_feasible(inst)


def test_random_instances_cross_oracle(rng):
    for _ in range(50):
        inst = random_feasible_instance(rng)
        cc = charnes_cooper_solve(inst)
        dk = dinkelbach_solve(inst)
        ref, _ = highs_lfp(inst.a, inst.b, inst.C, inst.d)
        assert cc.value == pytest.approx(dk.value, abs=1e-7)
        assert cc.value == pytest.approx(ref, abs=1e-7)
        assert np.all(inst.violation(cc.x) <= 1e-9)
        assert np.all((cc.x >= 0) & (cc.x <= 1))


def test_showcase_instance():
    inst = lfp_instance(ONLINE_LFP_INSTANCE)
    ref, _ = highs_lfp(inst.a, inst.b, inst.C, inst.d)
    assert charnes_cooper_solve(inst).value == pytest.approx(ref, abs=1e-9)
    assert online_lfp_drift_bound(inst) == pytest.approx(0.5 * (1.8 ** 2 + 1.8 ** 2))  # row 2 worst case is -1 - 0.8
    assert inst.to_dict()["d"] == [1.2, 0.8]


# ---------------------------------------------------------------------------
# attribute models

def test_attribute_optimum_unconstrained_is_deterministic(rng):
    """With no constraints the randomized optimum equals the best deterministic policy."""
    for _ in range(50):
        k = int(rng.integers(1, 4))
        sizes = rng.integers(1, 4, k)
        attr = AttributeModel(
            events=tuple(range(k)), probs=rng.dirichlet(np.ones(k)), actions=tuple(tuple(range(s)) for s in sizes),
            frame_mean=tuple(rng.uniform(0.5, 3, s) for s in sizes),
            attribute_means=tuple(rng.uniform(-1, 2, (s, 1)) for s in sizes), bounds=np.zeros(0))
        opt = attribute_optimum(attr)
        ref = highs_attribute_optimum(attr.frame_mean, attr.attribute_means, attr.probs, attr.bounds)
        assert opt.ratio_opt == pytest.approx(ref, abs=1e-9)
        assert opt.ratio_opt == pytest.approx(exhaustive_policy_ratio(attr, [], ControllerConfig(V=1.0)), abs=1e-9)


def test_attribute_optimum_smart_device():
    attr = smart_device_model()
    opt = attribute_optimum(attr)
    assert opt.status == "optimal"
    ref = highs_attribute_optimum(attr.frame_mean, attr.attribute_means, attr.probs, attr.bounds)
    assert opt.ratio_opt == pytest.approx(ref, abs=1e-9)
    # both constraints hold for the returned policy
    num = [0.0, 0.0]
    den = 0.0
    for p, pw, t, y in zip(opt.probs, attr.probs, attr.frame_mean, attr.attribute_means):
        num[0] += pw * float(p @ y[:, 1])
        num[1] += pw * float(p @ y[:, 2])
        den += pw * float(p @ t)
    assert max(num) <= 1e-9
    assert attribute_drift_bound(attr) > 0
    assert math.isfinite(den)
