"""Independent reference computations for the test suite.

Nothing here calls the package's decision rules or solvers: optima come
from scipy's HiGHS LP solver, exact rational arithmetic, or exhaustive
enumeration written out directly.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog as highs

ONE_CLASS_E = (1.0, 3.0)
ONE_CLASS_D = (7.0, 4.0)
ONE_CLASS_IMAX = 10.0


def ten_class_tables(rho=0.8):
    e = np.array([[i, 2.0 * i] for i in range(1, 11)])
    d = np.array([[5.0 * i, 3.0 * i] for i in range(1, 11)])
    lam = np.array([rho / (30.0 * i) for i in range(1, 11)])
    return e, d, lam


# ---------------------------------------------------------------------------
# per-frame decision oracles

def brute_task_decision(e, d, idle_max, q, V, idle_points=11):
    """Minimize ``(V e - Q_c) / (D + I)`` over classes, modes and an idle grid.

    Returns ``(value, c, m, I)`` with 1-based ``c, m``; first minimum wins in
    (class, mode, idle ascending) order.
    """
    e = np.atleast_2d(e)
    d = np.atleast_2d(d)
    grid = np.linspace(0.0, idle_max, idle_points) if idle_max > 0 else [0.0]
    best = (math.inf, None, None, None)
    for c in range(e.shape[0]):
        for m in range(e.shape[1]):
            for idle in grid:
                val = (V * e[c, m] - q[c]) / (d[c, m] + idle)
                if val < best[0]:
                    best = (val, c + 1, m + 1, float(idle))
    return best


def brute_flow_value(e, d, idle_max, q, z, null=None):
    """Minimum of ``(Z e - Q_c 1{c>0}) / (D + I)`` over the endpoint grid, plus
    the null option ``(D0, e0)`` when given. Returns ``(value, c, m, I)``."""
    best = (math.inf, None, None, None)
    idles = (0.0, idle_max) if idle_max > 0 else (0.0,)
    if null is not None:
        d0, e0 = null
        for m in range(np.atleast_2d(e).shape[1]):
            for idle in idles:
                val = (z * e0) / (d0 + idle)
                if val < best[0]:
                    best = (val, 0, m + 1, idle)
    for c in range(e.shape[0]):
        for m in range(e.shape[1]):
            for idle in idles:
                val = (z * e[c, m] - q[c]) / (d[c, m] + idle)
                if val < best[0]:
                    best = (val, c + 1, m + 1, idle)
    return best


# ---------------------------------------------------------------------------
# stationary-policy optimum via scipy (independent LP solver)

def highs_stationary_optimum(e, d, lam, idle_max):
    """Charnes-Cooper LP solved by HiGHS. Returns ``(value, p, idle)``."""
    e = np.atleast_2d(e).astype(float)
    d = np.atleast_2d(d).astype(float)
    n, k = e.shape
    nz = n * k
    # variables: z (nz), u (idle * t), t
    c = np.concatenate([e.ravel(), [0.0, 0.0]])
    A_eq = np.zeros((2, nz + 2))
    A_eq[0, :nz] = d.ravel()
    A_eq[0, nz] = 1.0
    A_eq[1, :nz] = 1.0
    A_eq[1, nz + 1] = -1.0
    A_ub = np.zeros((n + 1, nz + 2))
    for i in range(n):
        A_ub[i, i * k:(i + 1) * k] = -1.0
    A_ub[n, nz] = 1.0
    A_ub[n, nz + 1] = -idle_max
    b_ub = np.concatenate([-np.asarray(lam, dtype=float), [0.0]])
    res = highs(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0, 0.0], bounds=(0, None), method="highs")
    if res.status != 0:
        return math.nan, None, math.nan
    t = res.x[-1]
    p = res.x[:nz] / t
    return float(res.fun), p.reshape(n, k), float(res.x[nz] / t)


def exact_one_class_optimum(rate=Fraction(1, 5)):
    """Enumerate vertices of the one-class LFP in exact arithmetic.

    Power ``(p e1 + (1-p) e2) / (p D1 + (1-p) D2 + I)`` over ``p in [0,1]``,
    ``I in [0, I_max]`` with ``p D1 + (1-p) D2 + I <= 1/rate``. A linear
    fractional objective attains its optimum at a vertex of this polygon.
    """
    e1, e2 = Fraction(1), Fraction(3)
    d1, d2 = Fraction(7), Fraction(4)
    imax = Fraction(10)
    cap = None if rate == 0 else 1 / rate
    cands = []
    for p in (Fraction(0), Fraction(1)):
        for idle in (Fraction(0), imax):
            cands.append((p, idle))
        if cap is not None:
            idle = cap - (p * d1 + (1 - p) * d2)
            if 0 <= idle <= imax:
                cands.append((p, idle))
    if cap is not None:
        for idle in (Fraction(0), imax):
            # p d1 + (1-p) d2 + idle = cap
            if d1 != d2:
                p = (cap - idle - d2) / (d1 - d2)
                if 0 <= p <= 1:
                    cands.append((p, idle))
    best = None
    for p, idle in cands:
        den = p * d1 + (1 - p) * d2 + idle
        if cap is not None and den > cap:
            continue
        val = (p * e1 + (1 - p) * e2) / den
        if best is None or val < best[0]:
            best = (val, p, idle)
    return best


def highs_lfp(a, b, C, dvec):
    """Constrained box LFP through Charnes-Cooper on HiGHS; returns (value, x)."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    C = np.atleast_2d(np.asarray(C, float))
    dvec = np.asarray(dvec, float)
    m = a.size - 1
    c = np.concatenate([a[1:], [a[0]]])
    A_ub = np.vstack([np.hstack([C, -dvec[:, None]]), np.hstack([np.eye(m), -np.ones((m, 1))])])
    res = highs(c, A_ub=A_ub, b_ub=np.zeros(A_ub.shape[0]), A_eq=np.concatenate([b[1:], [b[0]]])[None, :],
                b_eq=[1.0], bounds=(0, None), method="highs")
    if res.status != 0:
        return math.nan, None
    x = res.x[:m] / res.x[-1]
    return float(res.fun), x


# ---------------------------------------------------------------------------
# enumeration oracles

def brute_box(phi, b):
    """Minimum of ``(phi0 + phi.x)/(b0 + b.x)`` over every 0/1 corner."""
    phi = np.asarray(phi, float)
    b = np.asarray(b, float)
    m = phi.size - 1
    best = math.inf
    for corner in itertools.product((0.0, 1.0), repeat=m):
        x = np.array(corner)
        best = min(best, (phi[0] + phi[1:] @ x) / (b[0] + b[1:] @ x))
    return best


def brute_box_vectorized(phi, b):
    phi = np.asarray(phi, float)
    b = np.asarray(b, float)
    m = phi.size - 1
    if m == 0:
        return phi[0] / b[0]
    bits = ((np.arange(2 ** m)[:, None] >> np.arange(m)[None, :]) & 1).astype(float)
    return float(np.min((phi[0] + bits @ phi[1:]) / (b[0] + bits @ b[1:])))


def exhaustive_policy(nums, dens, probs):
    """Best ``E[num]/E[den]`` over all deterministic per-event action choices."""
    best = math.inf
    for pol in itertools.product(*[range(len(n)) for n in nums]):
        num = sum(p * n[a] for p, n, a in zip(probs, nums, pol))
        den = sum(p * d[a] for p, d, a in zip(probs, dens, pol))
        best = min(best, num / den)
    return best


def best_deterministic_one_class(rate=0.2):
    """Best single (m, I) with I on a fine grid meeting ``1/(D+I) >= rate``."""
    best = math.inf
    for m in range(2):
        for idle in np.linspace(0.0, ONE_CLASS_IMAX, 1001):
            t = ONE_CLASS_D[m] + idle
            if rate > 0 and 1.0 / t < rate - 1e-15:
                continue
            best = min(best, ONE_CLASS_E[m] / t)
    return best


# ---------------------------------------------------------------------------
# a direct re-implementation of the one-class loop (float arithmetic)

def replay_one_class(V, frames, rate=0.2):
    """Plain-Python loop of the one-class scheduler. Returns (power, mode1 fraction)."""
    q = 0.0
    se = st = 0.0
    m1 = 0
    for _ in range(frames):
        best = None
        for m in range(2):
            idle = 0.0 if V * ONE_CLASS_E[m] - q <= 0 else ONE_CLASS_IMAX
            val = (V * ONE_CLASS_E[m] - q) / (ONE_CLASS_D[m] + idle)
            if best is None or val < best[0]:
                best = (val, m, idle)
        _, m, idle = best
        t = ONE_CLASS_D[m] + idle
        q = max(q + rate * t - 1.0, 0.0)
        se += ONE_CLASS_E[m]
        st += t
        m1 += m == 0
    return se / st, m1 / frames


def drift_bound_oracle(lam, t_max):
    return 0.5 * sum(max(l * t_max, 1.0) ** 2 for l in lam)


def highs_attribute_optimum(frame_mean, attribute_means, probs, bounds):
    """Best ``E[y0]/E[T]`` over randomized event-reactive policies with
    ``E[y_l] <= c_l E[T]``, as an LP in per-(event, action) occupation
    measures ``x(w, a) = pi(w) p(a|w) / E[T]``."""
    sizes = [len(t) for t in frame_mean]
    T = np.concatenate(frame_mean)
    Y = np.vstack(attribute_means)
    nz = T.size
    # x = z / E[T]: sum x T = 1, sum_a x(w, a) = pi(w) s, s = 1 / E[T] free >= 0
    c = np.concatenate([Y[:, 0], [0.0]])
    A_eq = [np.concatenate([T, [0.0]])]
    b_eq = [1.0]
    off = 0
    for w, s in enumerate(sizes):
        row = np.zeros(nz + 1)
        row[off:off + s] = 1.0
        row[-1] = -probs[w]
        A_eq.append(row)
        b_eq.append(0.0)
        off += s
    bounds = np.asarray(bounds, float)
    A_ub = np.hstack([(Y[:, 1:] - np.outer(T, bounds)).T, np.zeros((bounds.size, 1))]) if bounds.size else None
    res = highs(c, A_ub=A_ub, b_ub=np.zeros(bounds.size) if bounds.size else None, A_eq=np.array(A_eq),
                b_eq=b_eq, bounds=(0, None), method="highs")
    return float(res.fun) if res.status == 0 else math.nan
