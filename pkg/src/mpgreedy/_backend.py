"""Kernel backend selection.

``MPGREEDY_BACKEND=numpy`` forces the vectorized numpy kernels; the default
is ``numba`` whenever numba imports cleanly.
"""

import os

ENV_VAR = "MPGREEDY_BACKEND"

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False


def requested_backend() -> str:
    value = os.environ.get(ENV_VAR, "numba").strip().lower()
    if value not in ("numba", "numpy"):
        raise ValueError(f"{ENV_VAR} must be 'numba' or 'numpy', got {value!r}")
    if value == "numba" and not HAS_NUMBA:
        return "numpy"
    return value


BACKEND = requested_backend()
USE_NUMBA = BACKEND == "numba"
