"""Numba switch.

Set ``VPC_FORGE_NO_NUMBA=1`` before import to force the pure-numpy kernels.
"""

import os
from typing import Any, Callable

_disabled = os.environ.get("VPC_FORGE_NO_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _disabled:
        raise ImportError("numba disabled via VPC_FORGE_NO_NUMBA")
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False
    _njit = None


def njit(*args: Any, **kwargs: Any) -> Callable:
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAS_NUMBA:
        kwargs.setdefault("cache", True)
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
