"""Numba dispatch.

Set ``SARSBL_DISABLE_NUMBA=1`` to force the pure-numpy kernels (useful for
debugging and for environments without numba).
"""
import os

_FLAG = os.environ.get("SARSBL_DISABLE_NUMBA", "").strip().lower()

try:
    import numba  # noqa: F401
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and _FLAG not in ("1", "true", "yes", "on")

