"""Numba switch.

Kernels are compiled with numba when it is importable, unless the
environment variable ``TPEIFP_DISABLE_NUMBA`` is set to a truthy value, in
which case the pure-numpy implementations are used.
"""
import os

DISABLE_ENV = "TPEIFP_DISABLE_NUMBA"

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None


def _disabled_by_env():
    return os.environ.get(DISABLE_ENV, "").strip().lower() in {"1", "true", "yes", "on"}


USE_NUMBA = HAVE_NUMBA and not _disabled_by_env()


def njit(f=None, **options):
    """``numba.njit`` with caching on, or the identity when numba is missing."""
    options.setdefault("cache", True)
    if numba is None:
        return f if f is not None else (lambda g: g)
    if f is None:
        return lambda g: numba.njit(g, **options)
    return numba.njit(f, **options)
