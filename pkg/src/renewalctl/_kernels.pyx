# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled frame loops. Same signatures, semantics and floating-point
operation order as ``renewalctl._fallback``."""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log, floor, INFINITY, NAN
from libc.stdint cimport uint64_t
from numpy.random cimport bitgen_t

import numpy as np

BACKEND = "cython"

cdef const char *CAPSULE_NAME = "BitGenerator"


cdef inline double next_double(bitgen_t *rng) noexcept nogil:
    return (rng.next_raw(rng.state) >> 11) * (1.0 / 9007199254740992.0)


cdef inline double clamp_update(double q, double arrival, double service) noexcept nogil:
    cdef double v = q + arrival - service
    return v if v > 0.0 else 0.0


cdef inline void draw_busy_energy(double d_hat, double e_hat, int kind, double wd, double we,
                                  double d_min, bitgen_t *rng, double *busy, double *energy) noexcept nogil:
    cdef double u1, u2
    if kind == 0:
        busy[0] = d_hat
        energy[0] = e_hat
        return
    u1 = next_double(rng)
    u2 = next_double(rng)
    if kind == 1:
        busy[0] = d_hat + wd * (2.0 * u1 - 1.0)
        energy[0] = e_hat + we * (2.0 * u2 - 1.0)
    else:
        busy[0] = d_min + (d_hat - d_min) * -log(1.0 - u1)
        energy[0] = e_hat * -log(1.0 - u2)


cdef inline long frame_slots(double t) noexcept nogil:
    cdef long s = <long> floor(t + 0.5)
    return s if s > 1 else 1


cdef bitgen_t *_bitgen(rng) except NULL:
    return <bitgen_t *> PyCapsule_GetPointer(rng.bit_generator.capsule, CAPSULE_NAME)


def run_task(model, double V, q0, long horizon, long stride, long burn, rng):
    cdef int n = model.mean_energy.shape[0]
    cdef int k = model.mean_energy.shape[1]
    kind_a, wd_a, we_a = model.noise_tables()
    cdef const int[:, ::1] kind = np.ascontiguousarray(kind_a, dtype=np.int32)
    cdef const double[:, ::1] wd = np.ascontiguousarray(wd_a)
    cdef const double[:, ::1] we = np.ascontiguousarray(we_a)
    cdef const double[:, ::1] e_hat = np.ascontiguousarray(model.mean_energy, dtype=np.float64)
    cdef const double[:, ::1] d_hat = np.ascontiguousarray(model.mean_duration, dtype=np.float64)
    cdef const double[::1] lam = np.ascontiguousarray(model.rates, dtype=np.float64)
    cdef double idle_max = model.idle_max
    cdef double d_min = model.duration_min

    q_a = np.array(q0, dtype=np.float64)
    qmax_a = q_a.copy()
    arr_a = np.zeros(n)
    srv_a = np.zeros(n)
    counts_a = np.zeros((n, k), dtype=np.int64)
    served_a = np.zeros(n, dtype=np.int64)
    cdef long nrows = horizon // stride
    cdef int ncol = 7 + 2 * n + 3
    trace_a = np.zeros((nrows, ncol))
    cdef double[::1] q = q_a
    cdef double[::1] q_max = qmax_a
    cdef double[::1] arr_tot = arr_a
    cdef double[::1] srv_tot = srv_a
    cdef long[:, ::1] counts = counts_a
    cdef long[::1] served = served_a
    cdef double[:, ::1] trace = trace_a

    cdef bitgen_t *bg = _bitgen(rng)
    cdef long f, row = 0
    cdef int c, m, i, bc = 0, bm = 0, col
    cdef double e, qc, idle, val, best, best_idle = 0.0, busy = 0.0, energy = 0.0, t, a, s, power
    cdef double sum_e = 0.0, sum_d = 0.0, sum_i = 0.0, sum_t = 0.0, max_power = -INFINITY

    with rng.bit_generator.lock, nogil:
        for f in range(horizon):
            best = INFINITY
            for c in range(n):
                qc = q[c]
                for m in range(k):
                    e = e_hat[c, m]
                    idle = 0.0 if V * e - qc <= 0 else idle_max
                    val = (V * e - qc) / (d_hat[c, m] + idle)
                    if val < best:
                        best = val
                        bc = c
                        bm = m
                        best_idle = idle
            idle = best_idle
            draw_busy_energy(d_hat[bc, bm], e_hat[bc, bm], kind[bc, bm], wd[bc, bm], we[bc, bm],
                             d_min, bg, &busy, &energy)
            t = busy + idle
            for i in range(n):
                a = lam[i] * t
                s = 1.0 if i == bc else 0.0
                q[i] = clamp_update(q[i], a, s)
                arr_tot[i] += a
                srv_tot[i] += s
                if q[i] > q_max[i]:
                    q_max[i] = q[i]
            counts[bc, bm] += 1
            served[bc] += 1
            sum_e += energy
            sum_d += busy
            sum_i += idle
            sum_t += t
            power = sum_e / sum_t
            if f + 1 >= burn and power > max_power:
                max_power = power
            if (f + 1) % stride == 0:
                trace[row, 0] = f
                trace[row, 1] = bc + 1
                trace[row, 2] = bm + 1
                trace[row, 3] = idle
                trace[row, 4] = busy
                trace[row, 5] = energy
                trace[row, 6] = busy + idle
                for i in range(n):
                    trace[row, 7 + i] = q[i]
                col = 7 + n
                trace[row, col] = 0.0
                trace[row, col + 1] = 0.0
                trace[row, col + 2] = power
                for i in range(n):
                    trace[row, col + 3 + i] = served[i] / sum_t
                row += 1
    return {
        "frames": horizon, "sum_e": sum_e, "sum_D": sum_d, "sum_I": sum_i, "sum_T": sum_t,
        "mode_counts": counts_a, "served": served_a,
        "q_final": q_a, "q_max": qmax_a, "arr_total": arr_a, "srv_total": srv_a,
        "max_power_after_burn": max_power if max_power > -INFINITY else NAN,
        "trace": trace_a,
    }


def run_flow(model, double V, weights, double p_av, q0, double z0, long horizon, long stride,
             phase_starts, phase_mults, bint record_series, rng):
    cdef int n = model.mean_energy.shape[0]
    cdef int k = model.mean_energy.shape[1]
    kind_a, wd_a, we_a = model.noise_tables()
    cdef const int[:, ::1] kind = np.ascontiguousarray(kind_a, dtype=np.int32)
    cdef const double[:, ::1] wd = np.ascontiguousarray(wd_a)
    cdef const double[:, ::1] we = np.ascontiguousarray(we_a)
    cdef const double[:, ::1] e_hat = np.ascontiguousarray(model.mean_energy, dtype=np.float64)
    cdef const double[:, ::1] d_hat = np.ascontiguousarray(model.mean_duration, dtype=np.float64)
    cdef const double[::1] base = np.ascontiguousarray(model.rates, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const long[::1] p_start = np.ascontiguousarray(phase_starts, dtype=np.int64)
    cdef const double[::1] p_mult = np.ascontiguousarray(phase_mults, dtype=np.float64)
    cdef int nphase = p_start.shape[0]
    cdef double idle_max = model.idle_max
    cdef double d_min = model.duration_min
    cdef double null_busy = model.null_busy
    cdef double null_energy = model.null_energy
    cdef double idle_power = model.idle_power
    cdef int first = 0 if model.allow_null else 1
    cdef int n_idle = 1 if idle_max == 0 else 2

    q_a = np.array(q0, dtype=np.float64)
    qmax_a = q_a.copy()
    arr_a = np.zeros(n + 1)
    srv_a = np.zeros(n + 1)
    counts_a = np.zeros((n + 1, k), dtype=np.int64)
    served_a = np.zeros(n, dtype=np.int64)
    adm_a = np.zeros(n, dtype=np.int64)
    raw_a = np.zeros(n, dtype=np.int64)
    amax_a = np.zeros(n, dtype=np.int64)
    lam_a = np.zeros(n)
    gam_a = np.zeros(n)
    avec_a = np.zeros(n, dtype=np.int64)
    rvec_a = np.zeros(n, dtype=np.int64)
    cdef long ns = horizon if record_series else 0
    sadm_a = np.zeros(ns)
    sraw_a = np.zeros(ns)
    st_a = np.zeros(ns)
    cdef long nrows = horizon // stride
    cdef int ncol = 7 + 2 * n + 3
    trace_a = np.zeros((nrows, ncol))

    cdef double[::1] q = q_a
    cdef double[::1] q_max = qmax_a
    cdef double[::1] arr_tot = arr_a
    cdef double[::1] srv_tot = srv_a
    cdef long[:, ::1] counts = counts_a
    cdef long[::1] served = served_a
    cdef long[::1] admitted = adm_a
    cdef long[::1] raw = raw_a
    cdef long[::1] a_max = amax_a
    cdef double[::1] lam = lam_a
    cdef double[::1] gam = gam_a
    cdef long[::1] avec = avec_a
    cdef long[::1] rvec = rvec_a
    cdef double[::1] ser_adm = sadm_a
    cdef double[::1] ser_raw = sraw_a
    cdef double[::1] ser_t = st_a
    cdef double[:, ::1] trace = trace_a

    cdef bitgen_t *bg = _bitgen(rng)
    cdef long f, row = 0, slots, sl, wasted = 0, asum, rsum
    cdef int c, m, i, j, phase = 0, bc = 0, bm = 0, col
    cdef double z = z0, z_max = z0, qc, d, idle, val, best, best_idle = 0.0
    cdef double busy = 0.0, energy = 0.0, t, a, s, u, p, zs, power
    cdef double sum_e = 0.0, sum_d = 0.0, sum_i = 0.0, sum_t = 0.0
    cdef double s_run = 0.0, s_min = 0.0, excess = 0.0
    cdef double idles[2]
    idles[0] = 0.0
    idles[1] = idle_max

    for i in range(n):
        lam[i] = base[i] * p_mult[0]

    with rng.bit_generator.lock, nogil:
        for f in range(horizon):
            while phase + 1 < nphase and f >= p_start[phase + 1]:
                phase += 1
                for i in range(n):
                    lam[i] = base[i] * p_mult[phase]
            for i in range(n):
                gam[i] = 1.0 if q[i] <= V * w[i] else 0.0
            best = INFINITY
            for c in range(first, n + 1):
                qc = 0.0 if c == 0 else q[c - 1]
                for m in range(k):
                    if c == 0:
                        d = null_busy
                    else:
                        d = d_hat[c - 1, m]
                    for j in range(n_idle):
                        idle = idles[j]
                        if c == 0:
                            val = (z * (null_energy + idle_power * idle) - qc) / (d + idle)
                        else:
                            val = (z * (e_hat[c - 1, m] + idle_power * idle) - qc) / (d + idle)
                        if val < best:
                            best = val
                            bc = c
                            bm = m
                            best_idle = idle
            idle = best_idle
            if bc == 0:
                busy = null_busy
                energy = null_energy
            else:
                draw_busy_energy(d_hat[bc - 1, bm], e_hat[bc - 1, bm], kind[bc - 1, bm], wd[bc - 1, bm],
                                 we[bc - 1, bm], d_min, bg, &busy, &energy)
            energy = energy + idle_power * idle
            t = busy + idle
            slots = frame_slots(t)
            asum = 0
            rsum = 0
            for i in range(n):
                avec[i] = 0
                rvec[i] = 0
                p = lam[i] * gam[i]
                for sl in range(slots):
                    u = next_double(bg)
                    if u < p:
                        avec[i] += 1
                    if u < lam[i]:
                        rvec[i] += 1
                asum += avec[i]
                rsum += rvec[i]
            if bc > 0 and q[bc - 1] + avec[bc - 1] < 1.0:
                wasted += 1
            for i in range(n):
                a = <double> avec[i]
                s = 1.0 if i == bc - 1 else 0.0
                q[i] = clamp_update(q[i], a, s)
                arr_tot[i] += a
                srv_tot[i] += s
                admitted[i] += avec[i]
                raw[i] += rvec[i]
                if rvec[i] > a_max[i]:
                    a_max[i] = rvec[i]
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
            counts[bc, bm] += 1
            if bc > 0:
                served[bc - 1] += 1
            sum_e += energy
            sum_d += busy
            sum_i += idle
            sum_t += t
            if record_series:
                ser_adm[f] = <double> asum
                ser_raw[f] = <double> rsum
                ser_t[f] = t
            if (f + 1) % stride == 0:
                power = sum_e / sum_t
                trace[row, 0] = f
                trace[row, 1] = bc
                trace[row, 2] = bm + 1
                trace[row, 3] = idle
                trace[row, 4] = busy
                trace[row, 5] = energy
                trace[row, 6] = busy + idle
                for i in range(n):
                    trace[row, 7 + i] = q[i]
                col = 7 + n
                trace[row, col] = z
                trace[row, col + 1] = 0.0
                trace[row, col + 2] = power
                for i in range(n):
                    trace[row, col + 3 + i] = served[i] / sum_t
                row += 1
    return {
        "frames": horizon, "sum_e": sum_e, "sum_D": sum_d, "sum_I": sum_i, "sum_T": sum_t,
        "mode_counts": counts_a, "served": served_a, "wasted": wasted,
        "admitted": adm_a, "raw_arrivals": raw_a, "a_max": amax_a,
        "q_final": q_a, "q_max": qmax_a, "z_final": z, "z_max": z_max,
        "arr_total": arr_a, "srv_total": srv_a, "window_excess": excess,
        "series_admitted": sadm_a, "series_raw": sraw_a, "series_T": st_a,
        "trace": trace_a,
    }


def run_online_lfp(inst, double V, q0, long horizon, long stride):
    cdef const double[::1] a = np.ascontiguousarray(inst.a, dtype=np.float64)
    cdef const double[::1] b = np.ascontiguousarray(inst.b, dtype=np.float64)
    cdef const double[:, ::1] C = np.ascontiguousarray(inst.C, dtype=np.float64)
    cdef const double[::1] d = np.ascontiguousarray(inst.d, dtype=np.float64)
    cdef int M = a.shape[0] - 1
    cdef int L = d.shape[0]

    q_a = np.array(q0, dtype=np.float64)
    qmax_a = q_a.copy()
    arr_a = np.zeros(L)
    srv_a = np.zeros(L)
    sx_a = np.zeros(M)
    sy_a = np.zeros(L)
    phi_a = np.zeros(M + 1)
    x_a = np.zeros(M)
    key_a = np.zeros(M)
    idx_a = np.zeros(M, dtype=np.int64)
    cdef long nrows = horizon // stride
    cdef int ncol = 7 + 2 * L + 3
    trace_a = np.zeros((nrows, ncol))
    cdef double[::1] q = q_a
    cdef double[::1] q_max = qmax_a
    cdef double[::1] arr_tot = arr_a
    cdef double[::1] srv_tot = srv_a
    cdef double[::1] sum_x = sx_a
    cdef double[::1] sum_y = sy_a
    cdef double[::1] phi = phi_a
    cdef double[::1] x = x_a
    cdef double[::1] key = key_a
    cdef long[::1] idx = idx_a
    cdef double[:, ::1] trace = trace_a

    cdef long f, row = 0, ti
    cdef int i, l, nj, jj, col
    cdef double p, num, den, val, cx, tk, sum_num = 0.0, sum_den = 0.0

    with nogil:
        for f in range(horizon):
            phi[0] = V * a[0]
            for l in range(L):
                phi[0] -= q[l] * d[l]
            for i in range(M):
                p = V * a[i + 1]
                for l in range(L):
                    p += q[l] * C[l, i]
                phi[i + 1] = p
            # greedy rank-order rule
            num = phi[0]
            den = b[0]
            nj = 0
            for i in range(M):
                x[i] = 0.0
                if b[i + 1] == 0.0:
                    if phi[i + 1] < 0.0:
                        x[i] = 1.0
                        num += phi[i + 1]
                else:
                    # stable insertion by (ratio, index)
                    tk = phi[i + 1] / b[i + 1]
                    jj = nj
                    while jj > 0 and key[jj - 1] > tk:
                        key[jj] = key[jj - 1]
                        idx[jj] = idx[jj - 1]
                        jj -= 1
                    key[jj] = tk
                    idx[jj] = i + 1
                    nj += 1
            val = num / den
            for jj in range(nj):
                ti = idx[jj]
                if not key[jj] < val:
                    break
                num += phi[ti]
                den += b[ti]
                val = num / den
                x[ti - 1] = 1.0
            # realized attributes
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
                        cx += C[l, i]
                q[l] = clamp_update(q[l], cx, d[l])
                arr_tot[l] += cx
                srv_tot[l] += d[l]
                sum_y[l] += cx - d[l]
                if q[l] > q_max[l]:
                    q_max[l] = q[l]
            sum_num += num
            sum_den += den
            if (f + 1) % stride == 0:
                trace[row, 0] = f
                trace[row, 1] = 0.0
                trace[row, 2] = 0.0
                trace[row, 3] = 0.0
                trace[row, 4] = den
                trace[row, 5] = num
                trace[row, 6] = den + 0.0
                for l in range(L):
                    trace[row, 7 + l] = q[l]
                col = 7 + L
                trace[row, col] = 0.0
                trace[row, col + 1] = 0.0
                trace[row, col + 2] = sum_num / sum_den
                for l in range(L):
                    trace[row, col + 3 + l] = sum_y[l] / (f + 1)
                row += 1
    return {
        "frames": horizon, "sum_num": sum_num, "sum_den": sum_den, "sum_x": sx_a,
        "q_final": q_a, "q_max": qmax_a, "arr_total": arr_a, "srv_total": srv_a,
        "trace": trace_a,
    }
