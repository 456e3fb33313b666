"""JIT switch.

Kernels are decorated with :func:`njit`. When numba is importable and the
``SUBLOG_JIT`` environment variable is not set to a false value, the decorator
compiles them; otherwise it returns the function untouched and the kernels run
as plain numpy/Python.
"""
import os

_FALSE = {"0", "false", "no", "off"}

JIT_ENABLED = os.environ.get("SUBLOG_JIT", "1").strip().lower() not in _FALSE

if JIT_ENABLED:
    try:
        import numba as _numba
    except ImportError:  # pragma: no cover
        JIT_ENABLED = False


def njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity otherwise."""
    if JIT_ENABLED:
        return _numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def thread_count():
    """Worker cap from ``SUBLOG_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("SUBLOG_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return n
