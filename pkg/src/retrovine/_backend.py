"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy twins in ``_pykernels`` take over. Setting ``RETROVINE_PURE_PYTHON=1``
forces the fallback (useful for benchmarking and for debugging).
"""
import os

from . import _pykernels

BACKEND = "python"
kernels = _pykernels

if not os.environ.get("RETROVINE_PURE_PYTHON"):
    try:
        from . import _ckernels
    except ImportError:  # pragma: no cover - depends on the build
        pass
    else:
        BACKEND = "cython"
        kernels = _ckernels


def get_kernels(name=None):
    """Return the kernel module for ``name`` ("cython", "python" or current)."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
