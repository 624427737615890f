"""Numba switch.

Set ``PERCFORKS_DISABLE_NUMBA=1`` to run every kernel on its pure-numpy /
pure-Python path. Both paths consume random numbers in the same order, so a
given seed produces identical output either way.
"""

import os

_FLAG = os.environ.get("PERCFORKS_DISABLE_NUMBA", "").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(fn):
    """Compile ``fn`` in nopython mode when numba is importable.

    Returns ``fn`` untouched when numba is missing, so callers can always
    hold a reference to a "jitted" object.
    """
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
