"""Numba toggle.

Hot kernels are written once as plain loops and compiled with numba when it is
available. Setting ``HWCODESIGN_DISABLE_JIT=1`` routes callers to the
vectorised numpy fallbacks instead.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

JIT_ENABLED = numba is not None and os.environ.get("HWCODESIGN_DISABLE_JIT", "0") not in ("1", "true", "yes")


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity otherwise."""
    if numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)
