"""Numba toggle.

Set ``ALICECTL_NUMBA=0`` to run every kernel as plain numpy (no compilation).
The flag is read once at import time.
"""
import os

_FLAG = os.environ.get("ALICECTL_NUMBA", "1").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("0", "false", "no", "off")


def njit(func):
    if USE_NUMBA:
        return numba.njit(cache=True)(func)
    return func
