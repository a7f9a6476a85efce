"""Backend selection for the compiled kernels.

Set ``COUPONLAB_DISABLE_NUMBA=1`` to force the pure-numpy implementations.
The flag is read once at import time; kernels that accept a ``backend``
argument can still be switched per call (used by tests and benchmarks).
"""

import os

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # skip the TBB probe, which warns on older system TBB builds
        numba.config.THREADING_LAYER = "workqueue"
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f

    prange = range


def _flag_disabled():
    return os.environ.get("COUPONLAB_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")


USE_NUMBA = HAVE_NUMBA and not _flag_disabled()


def resolve_backend(backend=None):
    """Return ``"numba"`` or ``"numpy"`` for a requested backend (None = default)."""
    if backend is None:
        return "numba" if USE_NUMBA else "numpy"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    return backend


def set_threads(threads):
    """Set the numba worker count, clamped to what the runtime allows.

    Results never depend on this value; it only affects wall time.
    """
    if not HAVE_NUMBA or threads is None:
        return
    limit = numba.config.NUMBA_NUM_THREADS
    numba.set_num_threads(max(1, min(int(threads), limit)))


def max_threads():
    return numba.config.NUMBA_NUM_THREADS if HAVE_NUMBA else 1
