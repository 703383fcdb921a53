"""Seedable frame RNG shared by the compiled kernels and the Python fallback.

Both paths read raw 64-bit words from the same ``numpy.random.PCG64`` stream
and convert them to doubles with the same 53-bit rule, so a run is
bit-identical whichever backend executes it.
"""

from __future__ import annotations

import numpy as np

_INV_2_53 = 1.0 / 9007199254740992.0


class FrameRng:
    """One PCG64 stream per run; never share an instance between runs."""

    def __init__(self, seed: int):
        if not 0 <= int(seed) < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = int(seed)
        self.bit_generator = np.random.PCG64(self.seed)

    def uniform(self) -> float:
        return (self.bit_generator.random_raw() >> 11) * _INV_2_53

    def uniforms(self, n: int) -> np.ndarray:
        if n <= 0:
            return np.empty(0)
        raw = self.bit_generator.random_raw(n)
        return (raw >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def categorical(self, cdf: np.ndarray) -> int:
        """Inverse-CDF draw; ``cdf`` is the cumulative probability vector."""
        u = self.uniform()
        idx = int(np.searchsorted(cdf, u, side="right"))
        return min(idx, len(cdf) - 1)
