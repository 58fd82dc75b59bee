"""Optional numba acceleration.

Kernels are written as plain Python over ``numpy.random.Generator`` objects.
When numba is importable and ``EPIQUEUE_NO_NUMBA`` is unset (or ``0``), they
are compiled with ``numba.njit``; otherwise the same source runs under CPython.
Numba reimplements the Generator distributions bit-for-bit, so both paths
produce identical outcomes for identical seeds.
"""
import os

_flag = os.environ.get("EPIQUEUE_NO_NUMBA", "").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba
    NUMBA_ENABLED = True
except ImportError:
    numba = None
    NUMBA_ENABLED = False


def jit(func):
    """Compile ``func`` with ``numba.njit(cache=True)`` when acceleration is on."""
    if NUMBA_ENABLED:
        return numba.njit(cache=True)(func)
    return func


def backend():
    return "numba" if NUMBA_ENABLED else "python"


def numba_available():
    """Whether numba can be imported, regardless of the environment flag."""
    if numba is not None:
        return True
    try:
        import numba as _  # noqa: F401
    except ImportError:
        return False
    return True
