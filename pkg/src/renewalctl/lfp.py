"""Linear fractional programs: box-constrained greedy rule and offline oracles.

Two independent routes solve the constrained problem: the Charnes-Cooper
change of variables to a single linear program, and Dinkelbach's
parametric iteration over a sequence of linear programs.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import AttributeModel, TaskModel
from .simplex import linprog


class InfeasibleProblem(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LfpSolution:
    x: np.ndarray
    value: float
    status: str = "optimal"

    def raise_for_status(self) -> "LfpSolution":
        if self.status != "optimal":
            raise InfeasibleProblem(f"linear fractional program is {self.status}")
        return self


# ---------------------------------------------------------------------------
# box-constrained: min (phi0 + phi.x) / (b0 + b.x), 0 <= x <= 1

@dataclass(frozen=True, eq=False)
class BoxLfpInstance:
    phi: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float).reshape(-1)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if phi.shape != b.shape or phi.size == 0:
            raise ValueError("phi and b must have the same length M + 1 >= 1")
        if not b[0] > 0:
            raise ValueError(f"b0 must be positive, got {b[0]}")
        if np.any(b[1:] < 0):
            raise ValueError("b_i must be non-negative for i >= 1")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "b", b)

    @property
    def size(self) -> int:
        return self.phi.size - 1

    def ratio(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return (self.phi[0] + self.phi[1:] @ x) / (self.b[0] + self.b[1:] @ x)


def solve_box_lfp(inst: BoxLfpInstance) -> LfpSolution:
    """Greedy rank-order rule.

    Zero-weight denominators are set by the sign of their numerator
    coefficient; the rest are switched on in increasing ``phi_j / b_j`` order
    while the ratio strictly decreases. Adding ``j`` lowers the ratio exactly
    when ``phi_j / b_j < val``, so that comparison is the stopping test; it
    stays correct when ``b_j`` is too small for the new ratio to differ from
    ``val`` in floating point.
    """
    phi, b = inst.phi, inst.b
    m = inst.size
    x = np.zeros(m)
    num = float(phi[0])
    den = float(b[0])
    ranked = []
    for i in range(1, m + 1):
        if b[i] == 0.0:
            if phi[i] < 0.0:
                x[i - 1] = 1.0
                num += float(phi[i])
        else:
            ranked.append((float(phi[i]) / float(b[i]), i))
    ranked.sort()
    val = num / den
    for r, j in ranked:
        if not r < val:
            break
        num += float(phi[j])
        den += float(b[j])
        val = num / den
        x[j - 1] = 1.0
    return LfpSolution(x=x, value=val)


def brute_force_box_lfp(inst: BoxLfpInstance, max_M: int = 16) -> LfpSolution:
    """Exhaustive minimum over the ``2^M`` corners (first corner wins ties)."""
    m = inst.size
    if m > max_M:
        raise ValueError(f"brute force limited to M <= {max_M}, got {m}")
    if m == 0:
        return LfpSolution(x=np.zeros(0), value=float(inst.phi[0] / inst.b[0]))
    corners = np.array(list(itertools.product((0.0, 1.0), repeat=m)))
    vals = (inst.phi[0] + corners @ inst.phi[1:]) / (inst.b[0] + corners @ inst.b[1:])
    k = int(np.argmin(vals))
    return LfpSolution(x=corners[k], value=float(vals[k]))


# ---------------------------------------------------------------------------
# constrained: min (a0 + a.x) / (b0 + b.x), C x <= d, 0 <= x <= 1

@dataclass(frozen=True, eq=False)
class ConstrainedLfpInstance:
    a: np.ndarray
    b: np.ndarray
    C: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).reshape(-1)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if a.shape != b.shape:
            raise ValueError("a and b must both have length M + 1")
        m = a.size - 1
        C = np.asarray(self.C, dtype=float).reshape(-1, m) if m else np.zeros((len(self.d), 0))
        d = np.asarray(self.d, dtype=float).reshape(-1)
        if C.shape[0] != d.shape[0]:
            raise ValueError(f"constraint matrix has {C.shape[0]} rows but {d.shape[0]} bounds")
        if not b[0] > 0 or np.any(b[1:] < 0):
            raise ValueError("need b0 > 0 and b_i >= 0")
        for name, val in (("a", a), ("b", b), ("C", C), ("d", d)):
            object.__setattr__(self, name, val)

    @property
    def size(self) -> int:
        return self.a.size - 1

    @property
    def num_constraints(self) -> int:
        return self.d.size

    def ratio(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return (self.a[0] + self.a[1:] @ x) / (self.b[0] + self.b[1:] @ x)

    def violation(self, x) -> np.ndarray:
        return self.C @ np.asarray(x, dtype=float) - self.d

    def to_dict(self) -> dict:
        return {"a": self.a.tolist(), "b": self.b.tolist(), "C": self.C.tolist(), "d": self.d.tolist()}


def _box_rows(m):
    return np.eye(m), np.ones(m)


def charnes_cooper_solve(inst: ConstrainedLfpInstance) -> LfpSolution:
    """Solve via ``y = t x``, ``t = 1 / (b0 + b.x)``: one linear program in ``(y, t)``."""
    m = inst.size
    a0, a = inst.a[0], inst.a[1:]
    b0, b = inst.b[0], inst.b[1:]
    c = np.concatenate([a, [a0]])
    # C y - d t <= 0 ;  y - t <= 0
    A_ub = np.vstack([
        np.hstack([inst.C, -inst.d[:, None]]),
        np.hstack([np.eye(m), -np.ones((m, 1))]),
    ])
    b_ub = np.zeros(A_ub.shape[0])
    A_eq = np.concatenate([b, [b0]])[None, :]
    res = linprog(c, A_ub, b_ub, A_eq, [1.0])
    if res.status != "optimal":
        return LfpSolution(x=np.full(m, np.nan), value=np.nan, status="infeasible")
    t = res.x[-1]
    x = np.clip(res.x[:m] / t, 0.0, 1.0)
    return LfpSolution(x=x, value=inst.ratio(x))


def dinkelbach_solve(inst: ConstrainedLfpInstance, tol: float = 1e-12, max_iter: int = 100) -> LfpSolution:
    """Parametric iteration: ``h <- ratio(argmin num(x) - h den(x))`` until the
    minimum of the linear subproblem reaches zero."""
    m = inst.size
    A_box, b_box = _box_rows(m)
    A_ub = np.vstack([inst.C, A_box]) if m else np.zeros((0, 0))
    b_ub = np.concatenate([inst.d, b_box])
    if m == 0:
        if np.any(inst.d < 0):
            return LfpSolution(x=np.zeros(0), value=np.nan, status="infeasible")
        return LfpSolution(x=np.zeros(0), value=inst.a[0] / inst.b[0])
    start = linprog(np.zeros(m), A_ub, b_ub)
    if start.status != "optimal":
        return LfpSolution(x=np.full(m, np.nan), value=np.nan, status="infeasible")
    x = start.x
    h = inst.ratio(x)
    scale = 1.0 + float(np.abs(inst.a).sum() + np.abs(inst.b).sum())
    for _ in range(max_iter):
        res = linprog(inst.a[1:] - h * inst.b[1:], A_ub, b_ub)
        f = res.value + inst.a[0] - h * inst.b[0]
        if f >= -tol * scale:
            return LfpSolution(x=x, value=h)
        x = res.x
        h = inst.ratio(x)
    raise RuntimeError(f"Dinkelbach iteration did not converge in {max_iter} steps")


# ---------------------------------------------------------------------------
# stationary randomized policy for the rate-constrained scheduler

@dataclass(frozen=True, eq=False)
class StationaryOptimum:
    power_opt: float
    probs: np.ndarray  # (N, |M|) distribution over (class, mode)
    idle: float
    status: str = "optimal"

    def raise_for_status(self) -> "StationaryOptimum":
        if self.status != "optimal":
            raise InfeasibleProblem("no stationary policy meets the rate constraints")
        return self


def stationary_policy_optimum(model: TaskModel, rates=None, idle_max: float | None = None) -> StationaryOptimum:
    """Minimum average power over stationary randomized policies.

    Charnes-Cooper form with variables ``z = t p``, ``u = t I`` and ``t``::

        min  sum z e_hat
        s.t. sum z D_hat + u = 1,  sum z = t,
             sum_m z(n, m) >= lambda_n,  u <= I_max t
    """
    lam = model.rates if rates is None else np.asarray(rates, dtype=float)
    i_max = model.idle_max if idle_max is None else float(idle_max)
    n, k = model.mean_energy.shape
    nz = n * k
    e = model.mean_energy.reshape(-1)
    d = model.mean_duration.reshape(-1)
    c = np.concatenate([e, [0.0, 0.0]])
    A_eq = np.zeros((2, nz + 2))
    A_eq[0, :nz] = d
    A_eq[0, nz] = 1.0
    A_eq[1, :nz] = 1.0
    A_eq[1, nz + 1] = -1.0
    b_eq = [1.0, 0.0]
    A_ub = np.zeros((n + 1, nz + 2))
    for cls in range(n):
        A_ub[cls, cls * k:(cls + 1) * k] = -1.0
    A_ub[n, nz] = 1.0
    A_ub[n, nz + 1] = -i_max
    b_ub = np.concatenate([-lam, [0.0]])
    res = linprog(c, A_ub, b_ub, A_eq, b_eq)
    if res.status != "optimal":
        return StationaryOptimum(power_opt=np.nan, probs=np.full((n, k), np.nan), idle=np.nan, status="infeasible")
    t = res.x[-1]
    p = res.x[:nz] / t
    p = p / p.sum()
    idle = min(max(res.x[nz] / t, 0.0), i_max)
    power = float(p @ e) / (float(p @ d) + idle)
    return StationaryOptimum(power_opt=power, probs=p.reshape(n, k), idle=idle)


def stationary_lfp_instance(model: TaskModel, rates=None, idle_max: float | None = None) -> ConstrainedLfpInstance:
    """Encode the stationary-policy problem as a box-constrained LFP.

    Variables are ``p(c, m)`` followed by ``I / I_max``. Using ``sum p = 1``
    the denominator becomes ``D_min + sum p (D_hat - D_min) + I_max x_I`` so
    that ``b0 > 0``; the simplex equality is two inequalities.
    """
    lam = model.rates if rates is None else np.asarray(rates, dtype=float)
    i_max = model.idle_max if idle_max is None else float(idle_max)
    n, k = model.mean_energy.shape
    nz = n * k
    e = model.mean_energy.reshape(-1)
    d = model.mean_duration.reshape(-1)
    d_min = float(d.min())
    a = np.concatenate([[0.0], e, [0.0]])
    b = np.concatenate([[d_min], d - d_min, [i_max]])
    rows, rhs = [], []
    for cls in range(n):
        # lambda_n * den - sum_m p(n, m) <= 0
        row = lam[cls] * b[1:].copy()
        row[cls * k:(cls + 1) * k] -= 1.0
        rows.append(row)
        rhs.append(-lam[cls] * d_min)
    ones = np.concatenate([np.ones(nz), [0.0]])
    rows += [ones, -ones]
    rhs += [1.0, -1.0]
    return ConstrainedLfpInstance(a=a, b=b, C=np.array(rows), d=np.array(rhs))


def online_lfp_drift_bound(inst: ConstrainedLfpInstance) -> float:
    """``1/2 sum_l max_x (C_l x - d_l)^2`` over the unit box."""
    hi = np.clip(inst.C, 0.0, None).sum(axis=1) - inst.d
    lo = np.clip(inst.C, None, 0.0).sum(axis=1) - inst.d
    return 0.5 * float(np.sum(np.maximum(np.abs(hi), np.abs(lo)) ** 2))


def random_feasible_instance(rng: np.random.Generator, max_M: int = 6, max_L: int = 3) -> ConstrainedLfpInstance:
    """Random instance with a strictly feasible interior point."""
    m = int(rng.integers(1, max_M + 1))
    L = int(rng.integers(1, max_L + 1))
    a = rng.uniform(-1.0, 1.0, m + 1)
    b = np.concatenate([[rng.uniform(1.0, 2.0)], rng.uniform(0.0, 1.0, m)])
    C = rng.uniform(-2.0, 2.0, (L, m))
    x0 = rng.uniform(0.2, 0.8, m)
    d = C @ x0 + rng.uniform(0.05, 0.5, L)
    return ConstrainedLfpInstance(a=a, b=b, C=C, d=d)


def is_feasible(inst: ConstrainedLfpInstance) -> bool:
    return not math.isnan(charnes_cooper_solve(inst).value)


@dataclass(frozen=True, eq=False)
class AttributeOptimum:
    ratio_opt: float
    probs: tuple  # per event: conditional action probabilities
    status: str = "optimal"


def attribute_optimum(attr: AttributeModel) -> AttributeOptimum:
    """Best ``E[y0] / E[T]`` over stationary event-reactive randomized policies
    subject to ``E[y_l] <= c_l E[T]``.

    Charnes-Cooper variables ``z(w, a) = t pi(w) p(a | w)`` and ``t``::

        min  sum z y0
        s.t. sum z T = 1,  sum_a z(w, a) = pi(w) t,
             sum z (y_l - c_l T) <= 0
    """
    sizes = [len(a) for a in attr.actions]
    nz = sum(sizes)
    offs = np.concatenate([[0], np.cumsum(sizes)])
    T = np.concatenate(attr.frame_mean)
    Y = np.vstack(attr.attribute_means)
    L = attr.num_constraints
    c = np.concatenate([Y[:, 0], [0.0]])
    A_eq = np.zeros((1 + len(sizes), nz + 1))
    A_eq[0, :nz] = T
    for w in range(len(sizes)):
        A_eq[1 + w, offs[w]:offs[w + 1]] = 1.0
        A_eq[1 + w, nz] = -attr.probs[w]
    b_eq = np.zeros(1 + len(sizes))
    b_eq[0] = 1.0
    A_ub = np.zeros((L, nz + 1))
    if L:
        A_ub[:, :nz] = (Y[:, 1:] - np.outer(T, attr.bounds)).T
    res = linprog(c, A_ub if L else None, np.zeros(L) if L else None, A_eq, b_eq)
    if res.status != "optimal":
        return AttributeOptimum(ratio_opt=np.nan, probs=(), status=res.status)
    z = res.x[:nz]
    probs = []
    for w in range(len(sizes)):
        zw = z[offs[w]:offs[w + 1]]
        tot = zw.sum()
        probs.append(zw / tot if tot > 0 else np.full(sizes[w], 1.0 / sizes[w]))
    pw = np.asarray(attr.probs)
    num = sum(pw[w] * float(probs[w] @ attr.attribute_means[w][:, 0]) for w in range(len(sizes)))
    den = sum(pw[w] * float(probs[w] @ attr.frame_mean[w]) for w in range(len(sizes)))
    return AttributeOptimum(ratio_opt=num / den, probs=tuple(probs))


def attribute_drift_bound(attr: AttributeModel) -> float:
    """``1/2 sum_l max (y_l - c_l T)^2`` over every (event, action) pair."""
    worst = np.zeros(attr.num_constraints)
    for t, y in zip(attr.frame_mean, attr.attribute_means):
        worst = np.maximum(worst, np.max((y[:, 1:] - np.outer(t, attr.bounds)) ** 2, axis=0))
    return 0.5 * float(worst.sum())
