"""Numba switch.

Set ``SEPPOISSON_DISABLE_NUMBA=1`` to run every kernel through its pure-NumPy
path. Without numba installed the NumPy path is used unconditionally.
"""
import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

ENV_FLAG = "SEPPOISSON_DISABLE_NUMBA"

USE_NUMBA = HAVE_NUMBA and os.environ.get(ENV_FLAG, "").strip().lower() in ("", "0", "false", "no")


def njit(fn):
    """Compile ``fn`` with numba when available; otherwise return it unchanged."""
    if HAVE_NUMBA:
        return numba.njit(cache=True, fastmath=False)(fn)
    return fn
