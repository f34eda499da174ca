"""Optional numba acceleration.

Set ``SWARMLOAD_DISABLE_JIT=1`` before import to run every kernel through its
pure-numpy / pure-Python fallback.  The simulator kernels agree bit for bit
across paths; the feature kernel agrees to rounding (summation order differs).
"""

from __future__ import annotations

import os
import warnings

_DISABLED = os.environ.get("SWARMLOAD_DISABLE_JIT", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError
    import numba as _nb
except ImportError:
    _nb = None
    if not _DISABLED:
        warnings.warn("numba not found; swarmload kernels fall back to numpy", stacklevel=2)

USE_NUMBA = _nb is not None


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when enabled, identity otherwise."""
    if _nb is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn
    kwargs.setdefault("cache", True)
    return _nb.njit(*args, **kwargs)
