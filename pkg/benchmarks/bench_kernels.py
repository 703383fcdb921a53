"""Time the compiled and pure-Python frame loops on the same inputs.

    python benchmarks/bench_kernels.py [--frames N] [--repeat R]

Each kernel runs on both backends with the same seed. Outputs are compared
element by element before any timing is reported.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from renewalctl import kernels
from renewalctl.rng import FrameRng
from renewalctl.sim import get_scenario


def _cases(frames: int):
    s = get_scenario("ten_class", horizon=frames, seed=1)
    yield "task (ten_class)", "run_task", lambda: (s.model, 1.0, np.zeros(10), frames, 1, 100, FrameRng(1))

    f = get_scenario("rate_switch", horizon=frames, seed=1)
    starts, mults = f.phases()
    yield "flow (rate_switch)", "run_flow", lambda: (
        f.model, 100.0, np.ones(10), 0.5, np.zeros(10), 0.0, frames, 1, starts, mults, True, FrameRng(1))

    inst = get_scenario("online_lfp", horizon=10).model
    yield "online_lfp", "run_online_lfp", lambda: (inst, 100.0, np.zeros(len(inst.d)), frames, 1)


def _identical(a: dict, b: dict) -> bool:
    if a.keys() != b.keys():
        return False
    for k in a:
        x, y = np.asarray(a[k]), np.asarray(b[k])
        if x.shape != y.shape or not np.array_equal(x, y, equal_nan=x.dtype.kind == "f"):
            return False
    return True


def _best(fn, make_args, repeat: int) -> tuple[float, dict]:
    best, out = float("inf"), None
    for _ in range(repeat):
        args = make_args()
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    if kernels.compiled is None:
        print("compiled kernels are not built; nothing to compare", file=sys.stderr)
        return 1

    print(f"{'kernel':<20} {'python s':>10} {'cython s':>10} {'speedup':>9}  identical")
    status = 0
    for label, name, make_args in _cases(args.frames):
        tp, op = _best(getattr(kernels.fallback, name), make_args, args.repeat)
        tc, oc = _best(getattr(kernels.compiled, name), make_args, args.repeat)
        same = _identical(op, oc)
        status |= not same
        print(f"{label:<20} {tp:>10.3f} {tc:>10.4f} {tp / tc:>8.1f}x  {'yes' if same else 'NO'}")
    return status


if __name__ == "__main__":
    raise SystemExit(main())
