"""Backend selection for the hot kernels.

Set ``SHOCKLAB_BACKEND=numpy`` to bypass numba entirely (useful for
debugging and for the benchmark comparison). Any other value, or no value,
uses numba when it can be imported.
"""

import os

BACKEND = os.environ.get("SHOCKLAB_BACKEND", "numba").strip().lower()

try:
    if BACKEND == "numpy":
        raise ImportError
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False


def use_numba():
    return HAS_NUMBA


def njit(*args, **kwargs):
    """``numba.njit`` with ``cache=True``; identity decorator without numba."""
    if HAS_NUMBA:
        kwargs.setdefault("cache", True)
        return _njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn
