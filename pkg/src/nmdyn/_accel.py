"""JIT switch for the hot kernels.

Numba is used when it imports cleanly and ``NMDYN_DISABLE_NUMBA`` is unset
(or set to ``0``/``false``).  Otherwise ``njit`` is a no-op decorator and the
pure-numpy code paths in :mod:`nmdyn._kernels` are dispatched instead.
"""

import os

_FLAG = os.environ.get("NMDYN_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError
    import numba

    NUMBA_ENABLED = True
except ImportError:
    numba = None
    NUMBA_ENABLED = False


def njit(*args, **kwargs):
    if NUMBA_ENABLED:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


__all__ = ["NUMBA_ENABLED", "njit"]
