"""Kernel backend selection.

Hot loops are compiled with numba when available. Setting the environment
variable ``NHGEO_NUMBA=0`` (or any of ``off``, ``false``, ``no``) before
import selects the pure-numpy fallback: the same kernels run interpreted,
and array-level routines dispatch to vectorized numpy implementations.
The flag is read once at import time.
"""

import os

_FALSEY = {"0", "off", "false", "no"}


def _numba_requested() -> bool:
    return os.environ.get("NHGEO_NUMBA", "1").strip().lower() not in _FALSEY


NUMBA_ENABLED = False

if _numba_requested():
    try:
        from numba import njit as _numba_njit
        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False

if NUMBA_ENABLED:
    def njit(func=None, **kwargs):
        kwargs.setdefault("cache", True)
        if func is None:
            return _numba_njit(**kwargs)
        return _numba_njit(**kwargs)(func)
else:
    def njit(func=None, **kwargs):
        # identity decorator; expose .py_func like numba dispatchers do
        def wrap(f):
            f.py_func = f
            return f
        if func is None:
            return wrap
        return wrap(func)


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"


def set_num_threads(n: int) -> None:
    """Set the numba threading layer width; no-op on the numpy backend.

    Shipped kernels are serial, so results do not depend on this value;
    the threading layer is only touched when more than one thread is
    requested.
    """
    if n < 1:
        raise ValueError("thread count must be >= 1")
    if NUMBA_ENABLED and n > 1:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
