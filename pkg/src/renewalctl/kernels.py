"""Backend selection for the frame loops.

The compiled ``_kernels`` extension is used when it imports; otherwise the
pure-Python ``_fallback`` loops. Set ``RENEWALCTL_PURE_PYTHON=1`` to force the
fallback. Both expose ``run_task``, ``run_flow`` and ``run_online_lfp`` with
identical signatures and bit-identical results for a given seed.
"""

from __future__ import annotations

import os

from . import _fallback

fallback = _fallback
compiled = None

try:
    from . import _kernels as compiled  # type: ignore[no-redef]
except ImportError:  # extension not built
    compiled = None

if compiled is not None and not os.environ.get("RENEWALCTL_PURE_PYTHON"):
    active = compiled
else:
    active = _fallback

BACKEND: str = active.BACKEND
run_task = active.run_task
run_flow = active.run_flow
run_online_lfp = active.run_online_lfp


def get_backend(name: str | None = None):
    """Return the kernel module for ``"cython"``, ``"python"`` or the active default."""
    if name is None:
        return active
    if name == "python":
        return _fallback
    if name == "cython":
        if compiled is None:
            raise RuntimeError("compiled kernels are not available; reinstall to build the extension")
        return compiled
    raise ValueError(f"unknown backend {name!r}")
