"""Dense two-phase tableau simplex for small linear programs.

Solves ``min c.x  s.t.  A_ub x <= b_ub, A_eq x = b_eq, x >= 0``. The ratio
test is lexicographic on the rows of the inverse basis, which rules out
cycling under degeneracy. Sized for a few dozen variables; no sparsity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TOL = 1e-10


@dataclass
class LpResult:
    x: np.ndarray | None
    value: float
    status: str  # optimal | infeasible | unbounded
    iterations: int = 0


def _lex_min_row(T, rows, col, art_lo, art_hi):
    ratios = T[rows, -1] / T[rows, col]
    best = ratios.min()
    cand = [r for r, q in zip(rows, ratios) if q <= best + TOL * max(1.0, abs(best))]
    k = art_lo
    while len(cand) > 1 and k < art_hi:
        vals = np.array([T[r, k] / T[r, col] for r in cand])
        lo = vals.min()
        cand = [r for r, v in zip(cand, vals) if v <= lo + TOL]
        k += 1
    return cand[0]


def _pivot(T, obj, basis, row, col):
    T[row] /= T[row, col]
    for i in range(T.shape[0]):
        if i != row and T[i, col] != 0.0:
            T[i] -= T[i, col] * T[row]
    if obj[col] != 0.0:
        obj -= obj[col] * T[row]
    basis[row] = col


def _iterate(T, obj, basis, allowed, art_lo, art_hi, max_iter):
    it = 0
    while it < max_iter:
        red = np.where(allowed, obj[:-1], 0.0)
        col = int(np.argmin(red))
        if red[col] >= -TOL:
            return "optimal", it
        rows = [i for i in range(T.shape[0]) if T[i, col] > TOL]
        if not rows:
            return "unbounded", it
        row = _lex_min_row(T, rows, col, art_lo, art_hi)
        _pivot(T, obj, basis, row, col)
        it += 1
    raise RuntimeError(f"simplex did not terminate within {max_iter} pivots")


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, max_iter: int = 10000) -> LpResult:
    c = np.asarray(c, dtype=float).reshape(-1)
    n = c.shape[0]
    blocks, rhs, n_slack = [], [], 0
    if A_ub is not None and len(b_ub):
        A_ub = np.asarray(A_ub, dtype=float).reshape(-1, n)
        n_slack = A_ub.shape[0]
        blocks.append(np.hstack([A_ub, np.eye(n_slack)]))
        rhs.append(np.asarray(b_ub, dtype=float).reshape(-1))
    if A_eq is not None and len(b_eq):
        A_eq = np.asarray(A_eq, dtype=float).reshape(-1, n)
        blocks.append(np.hstack([A_eq, np.zeros((A_eq.shape[0], n_slack))]))
        rhs.append(np.asarray(b_eq, dtype=float).reshape(-1))
    if not blocks:
        if np.any(c < 0):
            return LpResult(None, -np.inf, "unbounded")
        return LpResult(np.zeros(n), 0.0, "optimal")

    A = np.vstack(blocks)
    b = np.concatenate(rhs)
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    m, nv = A.shape
    art_lo, art_hi = nv, nv + m

    T = np.hstack([A, np.eye(m), b[:, None]])
    basis = list(range(art_lo, art_hi))

    # phase 1: minimize the sum of artificials
    obj = np.zeros(nv + m + 1)
    obj[:nv] = -A.sum(axis=0)
    obj[-1] = -b.sum()
    allowed = np.ones(nv + m, dtype=bool)
    status, it1 = _iterate(T, obj, basis, allowed, art_lo, art_hi, max_iter)
    scale = max(1.0, float(np.abs(b).max()))
    if -obj[-1] > 1e-9 * scale:
        return LpResult(None, np.nan, "infeasible", it1)

    # drive zero-level artificials out of the basis; drop redundant rows
    keep = []
    for r in range(m):
        if basis[r] >= art_lo:
            cols = [j for j in range(nv) if abs(T[r, j]) > 1e-9]
            if cols:
                _pivot(T, obj, basis, r, cols[0])
                keep.append(r)
        else:
            keep.append(r)
    T = T[keep]
    basis = [basis[r] for r in keep]

    # phase 2
    cost = np.concatenate([c, np.zeros(nv - n)])
    obj = np.zeros(nv + m + 1)
    obj[:nv] = cost
    for r, j in enumerate(basis):
        if cost[j] != 0.0:
            obj -= cost[j] * T[r]
    allowed = np.zeros(nv + m, dtype=bool)
    allowed[:nv] = True
    status, it2 = _iterate(T, obj, basis, allowed, art_lo, art_hi, max_iter)
    if status == "unbounded":
        return LpResult(None, -np.inf, status, it1 + it2)
    x = np.zeros(nv + m)
    for r, j in enumerate(basis):
        x[j] = T[r, -1]
    x = np.maximum(x[:n], 0.0)
    return LpResult(x, float(c @ x), "optimal", it1 + it2)
