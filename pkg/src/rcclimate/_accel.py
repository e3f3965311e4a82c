"""Optional numba acceleration.

Set ``RCCLIMATE_DISABLE_NUMBA=1`` to run every kernel as plain Python on
numpy arrays. Jitted or not, the original function stays reachable through
``kernel.py_func`` so both paths can be compared side by side.
"""
import os

_FALSY = {"", "0", "false", "no", "off"}

NUMBA_DISABLED = os.environ.get("RCCLIMATE_DISABLE_NUMBA", "0").strip().lower() not in _FALSY

try:
    if NUMBA_DISABLED:
        raise ImportError
    import numba as _numba
except ImportError:  # pragma: no cover - exercised only without numba
    _numba = None

USE_NUMBA = _numba is not None


def kernel(fn):
    """Decorate a hot loop with ``njit(cache=True, nogil=True)`` when enabled."""
    if USE_NUMBA:
        return _numba.njit(cache=True, nogil=True)(fn)
    fn.py_func = fn
    return fn


def backend_name():
    return "numba" if USE_NUMBA else "python"
