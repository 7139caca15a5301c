"""Backend selection for the numeric kernels.

Kernels are written once in a numba-compatible subset of numpy.  When numba
is importable and ``DIGROWTH_BACKEND`` is not ``numpy``, they are compiled
with ``@njit``; otherwise the plain Python/numpy functions run unchanged.
The choice is made once, at import time.
"""

import os

_requested = os.environ.get("DIGROWTH_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(
        f"DIGROWTH_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

try:
    import numba as _nb
except ImportError:  # pragma: no cover - numba is a declared dependency
    _nb = None

BACKEND = "numba" if (_requested == "numba" and _nb is not None) else "numpy"


def njit(func):
    if BACKEND == "numba":
        return _nb.njit(cache=True, fastmath=False)(func)
    return func
