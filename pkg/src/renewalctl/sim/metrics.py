"""Time-average ratios and trailing-window moving averages."""

from __future__ import annotations

import math

import numpy as np


def time_average_ratio(numerator, denominator) -> float:
    """Ratio of sums, never an average of per-frame ratios.

    Accepts scalars (already cumulative) or per-frame sequences.
    """
    num = np.atleast_1d(np.asarray(numerator, dtype=float))
    den = np.atleast_1d(np.asarray(denominator, dtype=float))
    if num.size == 0 or den.size == 0:
        raise ValueError("time average of an empty stream")
    total = math.fsum(den)
    if total == 0:
        raise ValueError("time average with zero total frame time")
    return math.fsum(num) / total


def moving_average(stream, window: int, denominator=None) -> np.ndarray:
    """Trailing-window ratio ``sum(stream) / sum(denominator)`` per frame.

    Without a denominator the window length is used (a plain mean). The
    first ``window - 1`` entries average over the partial window.
    """
    if window < 1:
        raise ValueError("moving-average window must be at least 1")
    x = np.asarray(stream, dtype=float)
    cx = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(1, x.size + 1)
    lo = np.maximum(idx - window, 0)
    num = cx[idx] - cx[lo]
    if denominator is None:
        return num / (idx - lo)
    d = np.asarray(denominator, dtype=float)
    if d.shape != x.shape:
        raise ValueError("stream and denominator lengths differ")
    cd = np.concatenate([[0.0], np.cumsum(d)])
    return num / (cd[idx] - cd[lo])
