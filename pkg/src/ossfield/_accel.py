"""Numba switch.

Hot kernels are written twice: a loop version compiled with ``numba.njit`` and a
vectorised numpy version. Setting ``OSSFIELD_DISABLE_NUMBA=1`` (or running
without numba installed) selects the numpy path everywhere.
"""
from __future__ import annotations

import os

ENV_FLAG = "OSSFIELD_DISABLE_NUMBA"

try:
    import numba
except ImportError:  # pragma: no cover - numba is optional
    numba = None

HAVE_NUMBA = numba is not None


def _disabled_by_env() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = HAVE_NUMBA and not _disabled_by_env()


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, otherwise a no-op decorator."""
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
