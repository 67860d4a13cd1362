"""Kernel backend selection.

The compiled Cython module is used when importable; otherwise the numpy
fallback takes over. Setting ``ADLA_PURE_PYTHON=1`` forces the fallback.
"""
import os

from adla import _fallback

try:
    if os.environ.get("ADLA_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("disabled by ADLA_PURE_PYTHON")
    from adla import _kernels as kernels
    NAME = "cython"
except ImportError:
    kernels = _fallback
    NAME = "numpy"

fallback = _fallback


def resolve_threads(threads=None):
    """Worker count from the argument, then ``ADLA_THREADS``, then 1."""
    if threads is None:
        env = os.environ.get("ADLA_THREADS")
        threads = int(env) if env else 1
    if threads < 1:
        raise ValueError("threads must be >= 1")
    return int(threads)
