"""Optional numba acceleration.

Hot kernels are written once as plain Python and compiled with ``numba.njit``
when numba is importable and ``TENSORVAR_NUMBA`` is not set to ``0``. Every
compiled kernel has a pure-numpy twin that is used otherwise; both paths
consume the same ``np.random.Generator`` draws in the same order.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("TENSORVAR_NUMBA", "1").strip().lower()

try:  # pragma: no cover - exercised implicitly by whichever path is installed
    import numba as _numba
except ImportError:  # pragma: no cover
    _numba = None

NUMBA_AVAILABLE = _numba is not None
USE_NUMBA = NUMBA_AVAILABLE and _FLAG not in ("0", "false", "no", "off")


def njit(func):
    """Compile ``func`` with numba (cached) or return it untouched."""
    if not NUMBA_AVAILABLE:
        return func
    return _numba.njit(cache=True)(func)


def select(compiled, fallback):
    """Pick the compiled kernel when acceleration is on, else the numpy twin."""
    return compiled if USE_NUMBA else fallback


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
