"""Numba/numpy backend selection for the hot kernels.

The inner loops (steady-state time stepping, triangular back substitution)
are compiled with numba by default.  Setting the environment variable
``GROWFRAG_DISABLE_NUMBA=1`` before import selects the pure-numpy fallback
implementations instead; results agree to machine precision (see
``benchmarks/bench_backends.py`` for the speed comparison).
"""
from __future__ import annotations

import os


def _env_disabled() -> bool:
    return os.environ.get("GROWFRAG_DISABLE_NUMBA", "").strip().lower() in (
        "1", "true", "yes", "on",
    )


USE_NUMBA = not _env_disabled()

if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover - numba is a hard dependency
        USE_NUMBA = False

if not USE_NUMBA:
    def njit(*args, **kwargs):  # noqa: D103 - decorator passthrough
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
