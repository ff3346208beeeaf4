"""JIT switch.

Set ``CARTANFLOW_DISABLE_JIT=1`` to run every kernel through its numpy
implementation; this is also the fallback when numba is not importable.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional extra
    numba = None

JIT_ENABLED = numba is not None and os.environ.get("CARTANFLOW_DISABLE_JIT", "0") not in ("1", "true", "yes")


def njit(func=None, **kwargs):
    """``numba.njit`` when numba is present, identity decorator otherwise."""
    if numba is None:
        if func is not None:
            return func
        return lambda f: f
    kwargs.setdefault("cache", True)
    if func is not None:
        return numba.njit(**kwargs)(func)
    return numba.njit(**kwargs)
