"""Frame-driven run loop: dispatch a scenario to its kernel and summarize."""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..controllers import (
    ControllerConfig, ThetaTracker, algorithm1_policy, algorithm2_decision, analysis_constants,
    fixed_frame_decision, general_ratio_decision, has_constant_frame,
)
from ..lfp import (
    attribute_drift_bound, attribute_optimum, charnes_cooper_solve, online_lfp_drift_bound,
    stationary_policy_optimum,
)
from ..model import frame_slots
from ..queues import clamp_update
from ..rng import FrameRng
from .core import FrameTrace, RunSummary, Scenario, trace_columns
from .metrics import moving_average, time_average_ratio

BURN_FRAMES = 100


def run_scenario(s: Scenario, backend: str | None = None, trace: bool = True):
    """Execute ``s.horizon`` frames and return ``(RunSummary, FrameTrace | None)``.

    Deterministic given ``s.seed``; both kernel backends give identical output.
    """
    if s.kind == "task_scheduler":
        summary, tr = _run_task(s, kernels.get_backend(backend))
    elif s.kind == "flow_control":
        summary, tr = _run_flow(s, kernels.get_backend(backend))
    elif s.kind == "online_lfp":
        summary, tr = _run_online_lfp(s, kernels.get_backend(backend))
    else:
        summary, tr = _run_attribute(s)
    return summary, (tr if trace else None)


def _q0(s: Scenario) -> np.ndarray:
    if s.q0 is None:
        return np.zeros(s.num_queues)
    q0 = np.asarray(s.q0, dtype=float).reshape(-1)
    if q0.shape != (s.num_queues,) or np.any(q0 < 0):
        raise ValueError(f"q0 must hold {s.num_queues} non-negative values")
    return q0


def _common(s, backend, out, q0):
    K = out["frames"]
    return dict(
        scenario=s.name, kind=s.kind, V=float(s.V), seed=int(s.seed), frames=int(K), backend=backend,
        gaps=((out["q_final"] - q0) / K).tolist(),
        violations=((out["arr_total"][: len(q0)] - out["srv_total"][: len(q0)]) / K).tolist(),
        q_max=out["q_max"].tolist(), q_final=out["q_final"].tolist(),
    )


def _task_oracle(model, rates, extras):
    opt = stationary_policy_optimum(model, rates)
    extras["oracle_status"] = opt.status
    extras["power_opt"] = float(opt.power_opt)
    if opt.status != "optimal":
        return
    try:
        consts = analysis_constants(model, opt.power_opt, rates)
    except ValueError:  # unbounded noise has no worst-case frame
        return
    extras["B"] = consts.B
    extras["beta"] = consts.beta
    return consts


def _run_task(s: Scenario, km):
    m = s.model
    q0 = _q0(s)
    out = km.run_task(m, float(s.V), q0, s.horizon, s.stride, BURN_FRAMES, FrameRng(s.seed))
    K = s.horizon
    extras = {
        "mode_fractions": (out["mode_counts"] / K).tolist(),
        "max_power_after_burn": float(out["max_power_after_burn"]),
        "target_rates": m.rates.tolist(),
        "burn_frames": BURN_FRAMES,
    }
    consts = _task_oracle(m, m.rates, extras)
    if consts is not None:
        extras["power_bound"] = consts.power_bound(s.V)
        extras["gap_bound"] = consts.gap_bound(s.V, K)
    extras.update(s.params)
    summary = RunSummary(
        **_common(s, km.BACKEND, out, q0),
        avg_energy=out["sum_e"] / K, avg_busy=out["sum_D"] / K, avg_idle=out["sum_I"] / K,
        avg_frame=out["sum_T"] / K, power=time_average_ratio(out["sum_e"], out["sum_T"]),
        served_frac=(out["served"] / K).tolist(), admitted_avg=(out["arr_total"] / K).tolist(),
        rates=(out["served"] / out["sum_T"]).tolist(), extras=extras,
    )
    return summary, FrameTrace(trace_columns(m.num_classes), out["trace"], s.stride)


def _run_flow(s: Scenario, km):
    m = s.model
    n = m.num_classes
    q0 = _q0(s)
    weights = np.ones(n) if s.weights is None else np.asarray(s.weights, dtype=float)
    starts, mults = s.phases()
    if np.any(m.rates.max() * mults > 1.0):
        raise ValueError(f"scenario {s.name!r}: per-slot arrival probability exceeds 1 in some phase")
    out = km.run_flow(m, float(s.V), weights, float(s.power_budget), q0, float(s.z0), s.horizon,
                      s.stride, starts, mults, True, FrameRng(s.seed))
    K = s.horizon
    sum_t = out["sum_T"]
    adm, raw, ts = out["series_admitted"], out["series_raw"], out["series_T"]
    extras = {
        "power_budget": float(s.power_budget),
        "weights": weights.tolist(),
        "admission_rate": time_average_ratio(adm, ts),
        "arrival_rate": time_average_ratio(raw, ts),
        "admitted_rates": (out["admitted"] / sum_t).tolist(),
        "arrival_rates": (out["raw_arrivals"] / sum_t).tolist(),
        "z_final": float(out["z_final"]),
        "z_max": float(out["z_max"]),
        "power_gap": (float(out["z_final"]) - s.z0) / K,
        "power_violation": (out["arr_total"][n] - out["srv_total"][n]) / K,
        "window_excess": float(out["window_excess"]),
        "a_max": out["a_max"].tolist(),
        "wasted_frames": int(out["wasted"]),
        "null_frames": int(out["mode_counts"][0].sum()),
        "mode_fractions": (out["mode_counts"] / K).tolist(),
        "moving_window": s.moving_window,
    }
    try:
        t_max = m.max_duration() + m.idle_max
        a_bound = frame_slots(t_max)
        extras["arrivals_per_frame_max"] = a_bound
        extras["queue_bounds"] = (s.V * weights + a_bound).tolist()
    except ValueError:
        pass
    bounds = list(starts) + [K]
    phase_rows = []
    for i, mult in enumerate(mults):
        lo, hi = int(bounds[i]), min(int(bounds[i + 1]), K)
        if hi <= lo:
            continue
        ma = moving_average(adm[lo:hi], s.moving_window, ts[lo:hi])
        phase_rows.append({
            "start": lo, "end": hi, "multiplier": float(mult),
            "admission_rate": time_average_ratio(adm[lo:hi], ts[lo:hi]),
            "arrival_rate": time_average_ratio(raw[lo:hi], ts[lo:hi]),
            "nominal_arrival_rate": float(mult * m.rates.sum()),
            "ma_admission_mean": float(ma.mean()),
        })
    extras["phases"] = phase_rows
    extras.update(s.params)
    summary = RunSummary(
        **_common(s, km.BACKEND, out, q0),
        avg_energy=out["sum_e"] / K, avg_busy=out["sum_D"] / K, avg_idle=out["sum_I"] / K,
        avg_frame=sum_t / K, power=time_average_ratio(out["sum_e"], sum_t),
        served_frac=(out["served"] / K).tolist(), admitted_avg=(out["admitted"] / K).tolist(),
        rates=(out["served"] / sum_t).tolist(), extras=extras,
    )
    tr = FrameTrace(trace_columns(n), out["trace"], s.stride)
    rows = tr.data[:, 0].astype(np.int64)
    tr.extra = {
        "ma_admission_rate": moving_average(adm, s.moving_window, ts)[rows],
        "ma_arrival_rate": moving_average(raw, s.moving_window, ts)[rows],
    }
    return summary, tr


def _run_online_lfp(s: Scenario, km):
    inst = s.model
    q0 = _q0(s)
    out = km.run_online_lfp(inst, float(s.V), q0, s.horizon, s.stride)
    K = s.horizon
    x_bar = out["sum_x"] / K
    extras = {
        "x_bar": x_bar.tolist(),
        "objective": inst.ratio(x_bar),
        "constraint_excess": (inst.C @ x_bar - inst.d).tolist(),
    }
    opt = charnes_cooper_solve(inst)
    extras["oracle_status"] = opt.status
    extras["ratio_opt"] = float(opt.value)
    B = online_lfp_drift_bound(inst)
    extras["B"] = B
    if s.V > 0 and opt.status == "optimal":
        extras["ratio_bound"] = float(opt.value) + B / (s.V * float(inst.b[0]))
    extras.update(s.params)
    summary = RunSummary(
        **_common(s, km.BACKEND, out, q0),
        avg_energy=out["sum_num"] / K, avg_busy=out["sum_den"] / K, avg_idle=0.0,
        avg_frame=out["sum_den"] / K, power=time_average_ratio(out["sum_num"], out["sum_den"]),
        served_frac=[], admitted_avg=(out["arr_total"] / K).tolist(),
        rates=(out["arr_total"] / K).tolist(), extras=extras,
    )
    return summary, FrameTrace(trace_columns(len(inst.d)), out["trace"], s.stride)


def _run_attribute(s: Scenario):
    """Pure-Python loop over an enumerated attribute model."""
    attr = s.model
    L = attr.num_constraints
    bounds = [float(x) for x in attr.bounds]
    q0 = _q0(s)
    q = q0.copy()
    q_max = q.copy()
    arr = np.zeros(L)
    srv = np.zeros(L)
    sum_y = np.zeros(L + 1)
    sum_t = 0.0
    theta = ThetaTracker(s.theta_window)
    cfg = ControllerConfig(V=float(s.V))
    rng = FrameRng(s.seed)
    single = len(attr.events) == 1
    stride = s.stride
    K = s.horizon
    counts = [np.zeros(len(a), dtype=np.int64) for a in attr.actions]
    if s.kind == "fixed_frame" and not has_constant_frame(attr):
        raise ValueError(f"scenario {s.name!r}: fixed-frame rule requires a constant expected frame size")
    rows = []
    for f in range(K):
        w = 0 if single else attr.sample_event(rng)
        th = theta.theta
        if s.kind == "algorithm1":
            a = algorithm1_policy(attr, q, cfg).actions[w]
        elif s.kind == "algorithm2":
            a = algorithm2_decision(attr, w, q, th, cfg)
        elif s.kind == "fixed_frame":
            a = fixed_frame_decision(attr, w, q, cfg, check=False)
        else:
            a = general_ratio_decision(attr, w, q, cfg)
        t, y = attr.sample(w, a, rng)
        for l in range(L):
            svc = bounds[l] * t
            q[l] = clamp_update(q[l], float(y[l + 1]), svc)
            arr[l] += y[l + 1]
            srv[l] += svc
            if q[l] > q_max[l]:
                q_max[l] = q[l]
        theta.update(float(y[0]), t)
        sum_y += y
        sum_t += t
        counts[w][a] += 1
        if (f + 1) % stride == 0:
            rows.append([float(f), float(w), float(a), 0.0, t, float(y[0]), t, *q, 0.0, th,
                         sum_y[0] / sum_t, *(sum_y[1:] / sum_t)])
    extras = {
        "theta_final": theta.theta,
        "constraint_bounds": bounds,
        "action_fractions": [(c / K).tolist() for c in counts],
    }
    opt = attribute_optimum(attr)
    extras["oracle_status"] = opt.status
    extras["ratio_opt"] = float(opt.ratio_opt)
    B = attribute_drift_bound(attr)
    extras["B"] = B
    if s.V > 0 and opt.status == "optimal":
        extras["ratio_bound"] = float(opt.ratio_opt) + B / (s.V * attr.frame_min)
    extras.update(s.params)
    out = {"frames": K, "q_final": q, "q_max": q_max, "arr_total": arr, "srv_total": srv}
    summary = RunSummary(
        **_common(s, "python", out, q0),
        avg_energy=sum_y[0] / K, avg_busy=sum_t / K, avg_idle=0.0, avg_frame=sum_t / K,
        power=time_average_ratio(sum_y[0], sum_t),
        served_frac=[], admitted_avg=(arr / K).tolist(), rates=(sum_y[1:] / sum_t).tolist(), extras=extras,
    )
    data = np.array(rows, dtype=float).reshape(len(rows), 7 + 2 * L + 3)
    return summary, FrameTrace(trace_columns(L), data, stride)


__all__ = ["run_scenario"]
