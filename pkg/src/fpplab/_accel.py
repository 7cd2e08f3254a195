"""Switch between numba-compiled kernels and their plain Python source.

Set ``FPPLAB_NO_NUMBA=1`` before import to run every kernel as ordinary
Python/numpy.  The compiled dispatchers keep the original function on
``.py_func`` so both paths can be compared in one process.
"""

import os

USE_NUMBA = os.environ.get("FPPLAB_NO_NUMBA", "").strip().lower() not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from numba import njit as _njit
    except ImportError:  # pragma: no cover - numba is a declared dependency
        USE_NUMBA = False

if USE_NUMBA:

    def kernel(fn):
        return _njit(cache=True, nogil=True)(fn)

else:

    def kernel(fn):
        fn.py_func = fn
        return fn


__all__ = ["USE_NUMBA", "kernel"]
