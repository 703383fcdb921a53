"""Pure-Python frame loops; reference semantics for the compiled kernels.

Each loop composes the library's decision rules and queue update directly.
The compiled module ``_kernels`` implements the same loops with the same
floating-point operation order, so both backends give bit-identical output.
"""

from __future__ import annotations

import math

import numpy as np

from .controllers import ControllerConfig, flow_control_decision, flow_task_decision, task_schedule_decision
from .lfp import BoxLfpInstance, solve_box_lfp
from .model import draw_busy_energy, frame_slots
from .queues import clamp_update

BACKEND = "python"


def _trace_row(k, c, m, idle, busy, energy, q, z, theta, power, rates):
    return [float(k), float(c), float(m), idle, busy, energy, busy + idle, *q, z, theta, power, *rates]


def run_task(model, V, q0, horizon, stride, burn, rng):
    cfg = ControllerConfig(V=V)
    n, k = model.mean_energy.shape
    kind, wd, we = model.noise_tables()
    lam = [float(x) for x in model.rates]
    q = [float(x) for x in q0]
    q_max = list(q)
    arr_tot = [0.0] * n
    srv_tot = [0.0] * n
    counts = np.zeros((n, k), dtype=np.int64)
    served = [0] * n
    sum_e = sum_d = sum_i = sum_t = 0.0
    max_power = -math.inf
    rows = []
    for f in range(horizon):
        c, m, idle = task_schedule_decision(model, q, cfg)
        busy, energy = draw_busy_energy(
            float(model.mean_duration[c - 1, m - 1]), float(model.mean_energy[c - 1, m - 1]),
            int(kind[c - 1, m - 1]), float(wd[c - 1, m - 1]), float(we[c - 1, m - 1]),
            model.duration_min, rng)
        t = busy + idle
        for i in range(n):
            a = lam[i] * t
            s = 1.0 if i == c - 1 else 0.0
            q[i] = clamp_update(q[i], a, s)
            arr_tot[i] += a
            srv_tot[i] += s
            if q[i] > q_max[i]:
                q_max[i] = q[i]
        counts[c - 1, m - 1] += 1
        served[c - 1] += 1
        sum_e += energy
        sum_d += busy
        sum_i += idle
        sum_t += t
        power = sum_e / sum_t
        if f + 1 >= burn and power > max_power:
            max_power = power
        if (f + 1) % stride == 0:
            rows.append(_trace_row(f, c, m, idle, busy, energy, q, 0.0, 0.0, power,
                                   [s / sum_t for s in served]))
    return {
        "frames": horizon, "sum_e": sum_e, "sum_D": sum_d, "sum_I": sum_i, "sum_T": sum_t,
        "mode_counts": counts, "served": np.array(served, dtype=np.int64),
        "q_final": np.array(q), "q_max": np.array(q_max),
        "arr_total": np.array(arr_tot), "srv_total": np.array(srv_tot),
        "max_power_after_burn": max_power if max_power > -math.inf else math.nan,
        "trace": np.array(rows).reshape(len(rows), 7 + 2 * n + 3),
    }


def run_flow(model, V, weights, p_av, q0, z0, horizon, stride, phase_starts, phase_mults, record_series, rng):
    cfg = ControllerConfig(V=V, weights=tuple(weights))
    n, k = model.mean_energy.shape
    kind, wd, we = model.noise_tables()
    base = np.asarray(model.rates, dtype=float)
    q = [float(x) for x in q0]
    z = float(z0)
    q_max = list(q)
    z_max = z
    arr_tot = [0.0] * (n + 1)
    srv_tot = [0.0] * (n + 1)
    counts = np.zeros((n + 1, k), dtype=np.int64)
    served = [0] * n
    wasted = 0
    admitted = [0] * n
    raw = [0] * n
    a_max = [0] * n
    sum_e = sum_d = sum_i = sum_t = 0.0
    s_run = 0.0
    s_min = 0.0
    excess = 0.0
    rows = []
    ser_adm = np.zeros(horizon if record_series else 0)
    ser_raw = np.zeros(horizon if record_series else 0)
    ser_t = np.zeros(horizon if record_series else 0)
    phase = 0
    lam = base * phase_mults[0]
    for f in range(horizon):
        while phase + 1 < len(phase_starts) and f >= phase_starts[phase + 1]:
            phase += 1
            lam = base * phase_mults[phase]
        gamma = flow_control_decision(q, cfg)
        c, m, idle = flow_task_decision(model, q, z, cfg)
        if c == 0:
            busy = model.null_busy
            energy = model.null_energy
        else:
            busy, energy = draw_busy_energy(
                float(model.mean_duration[c - 1, m - 1]), float(model.mean_energy[c - 1, m - 1]),
                int(kind[c - 1, m - 1]), float(wd[c - 1, m - 1]), float(we[c - 1, m - 1]),
                model.duration_min, rng)
        energy = energy + model.idle_power * idle
        t = busy + idle
        slots = frame_slots(t)
        u = rng.uniforms(n * slots).reshape(n, slots)
        a_vec = (u < (lam * gamma)[:, None]).sum(axis=1)
        r_vec = (u < lam[:, None]).sum(axis=1)
        if c > 0 and q[c - 1] + a_vec[c - 1] < 1.0:
            wasted += 1
        for i in range(n):
            a = float(a_vec[i])
            s = 1.0 if i == c - 1 else 0.0
            q[i] = clamp_update(q[i], a, s)
            arr_tot[i] += a
            srv_tot[i] += s
            admitted[i] += int(a_vec[i])
            raw[i] += int(r_vec[i])
            if r_vec[i] > a_max[i]:
                a_max[i] = int(r_vec[i])
            if q[i] > q_max[i]:
                q_max[i] = q[i]
        zs = t * p_av
        z = clamp_update(z, energy, zs)
        arr_tot[n] += energy
        srv_tot[n] += zs
        if z > z_max:
            z_max = z
        s_run += energy - zs
        if s_run < s_min:
            s_min = s_run
        if s_run - s_min > excess:
            excess = s_run - s_min
        counts[c, m - 1] += 1
        if c > 0:
            served[c - 1] += 1
        sum_e += energy
        sum_d += busy
        sum_i += idle
        sum_t += t
        if record_series:
            ser_adm[f] = float(a_vec.sum())
            ser_raw[f] = float(r_vec.sum())
            ser_t[f] = t
        if (f + 1) % stride == 0:
            rows.append(_trace_row(f, c, m, idle, busy, energy, q, z, 0.0, sum_e / sum_t,
                                   [s / sum_t for s in served]))
    return {
        "frames": horizon, "sum_e": sum_e, "sum_D": sum_d, "sum_I": sum_i, "sum_T": sum_t,
        "mode_counts": counts, "served": np.array(served, dtype=np.int64), "wasted": wasted,
        "admitted": np.array(admitted, dtype=np.int64), "raw_arrivals": np.array(raw, dtype=np.int64),
        "a_max": np.array(a_max, dtype=np.int64),
        "q_final": np.array(q), "q_max": np.array(q_max), "z_final": z, "z_max": z_max,
        "arr_total": np.array(arr_tot), "srv_total": np.array(srv_tot), "window_excess": excess,
        "series_admitted": ser_adm, "series_raw": ser_raw, "series_T": ser_t,
        "trace": np.array(rows).reshape(len(rows), 7 + 2 * n + 3),
    }


def run_online_lfp(inst, V, q0, horizon, stride):
    a = [float(x) for x in inst.a]
    b = [float(x) for x in inst.b]
    C = [[float(x) for x in row] for row in inst.C]
    d = [float(x) for x in inst.d]
    M = len(a) - 1
    L = len(d)
    q = [float(x) for x in q0]
    q_max = list(q)
    arr_tot = [0.0] * L
    srv_tot = [0.0] * L
    sum_x = [0.0] * M
    sum_y = [0.0] * L
    sum_num = sum_den = 0.0
    rows = []
    for f in range(horizon):
        phi = [V * a[0]]
        for l in range(L):
            phi[0] -= q[l] * d[l]
        for i in range(M):
            p = V * a[i + 1]
            for l in range(L):
                p += q[l] * C[l][i]
            phi.append(p)
        x = solve_box_lfp(BoxLfpInstance(phi, b)).x
        num = a[0]
        den = b[0]
        for i in range(M):
            if x[i] == 1.0:
                num += a[i + 1]
                den += b[i + 1]
                sum_x[i] += 1.0
        for l in range(L):
            cx = 0.0
            for i in range(M):
                if x[i] == 1.0:
                    cx += C[l][i]
            q[l] = clamp_update(q[l], cx, d[l])
            arr_tot[l] += cx
            srv_tot[l] += d[l]
            sum_y[l] += cx - d[l]
            if q[l] > q_max[l]:
                q_max[l] = q[l]
        sum_num += num
        sum_den += den
        if (f + 1) % stride == 0:
            rows.append(_trace_row(f, 0, 0, 0.0, den, num, q, 0.0, 0.0, sum_num / sum_den,
                                   [s / (f + 1) for s in sum_y]))
    return {
        "frames": horizon, "sum_num": sum_num, "sum_den": sum_den, "sum_x": np.array(sum_x),
        "q_final": np.array(q), "q_max": np.array(q_max),
        "arr_total": np.array(arr_tot), "srv_total": np.array(srv_tot),
        "trace": np.array(rows).reshape(len(rows), 7 + 2 * L + 3),
    }
