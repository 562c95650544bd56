"""Dispatch between numba-compiled and pure-numpy kernels.

Hot inner loops (grid covering checks, shadowing recursions, batch
projections) are written as numba-compilable functions.  Setting the
environment variable ``MTV_DISABLE_NUMBA=1`` before import selects the
plain-Python/numpy fallback, which is what ``benchmarks/bench_kernels.py``
uses to compare the two paths.
"""

import os

NUMBA_DISABLED = os.environ.get("MTV_DISABLE_NUMBA", "0") not in ("0", "", "false")

if not NUMBA_DISABLED:
    try:
        from numba import njit as _njit
    except ImportError:  # pragma: no cover
        NUMBA_DISABLED = True

if NUMBA_DISABLED:
    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn

        return wrap
else:
    def njit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        return _njit(*args, **kwargs)


def using_numba():
    return not NUMBA_DISABLED
