"""Optional numba acceleration.

Kernels are written once as plain Python over scalars and 1-D float arrays and
wrapped with :func:`kernel`.  When numba is importable and the environment
variable ``GPCLAB_DISABLE_NUMBA`` is unset (or ``0``), they are compiled with
``numba.njit(cache=True)``; otherwise the undecorated Python is used.  The
un-jitted function is always reachable as ``.py_func`` so both paths can be
benchmarked and cross-checked in one process.
"""

from __future__ import annotations

import logging
import os

ENV_FLAG = "GPCLAB_DISABLE_NUMBA"


def _numba_requested() -> bool:
    return os.environ.get(ENV_FLAG, "0").strip().lower() in ("", "0", "false", "no")


try:
    if not _numba_requested():
        raise ImportError("numba disabled by " + ENV_FLAG)
    import numba

    logging.getLogger("numba").setLevel(logging.WARNING)
    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


def kernel(func):
    """Compile ``func`` with numba when enabled; expose ``py_func`` either way."""
    if HAVE_NUMBA:
        return numba.njit(cache=True)(func)
    func.py_func = func
    return func


def backend() -> str:
    return "numba" if HAVE_NUMBA else "python"
