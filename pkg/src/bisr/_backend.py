"""Kernel backend selection.

``BISR_BACKEND=numpy`` forces the pure-numpy kernels. Any other value (or
unset) uses numba when it can be imported.
"""

import os

from . import _numpy_kernels


def _load():
    if os.environ.get("BISR_BACKEND", "numba").strip().lower() == "numpy":
        return "numpy", _numpy_kernels
    try:
        from . import _numba_kernels
    except ImportError:
        return "numpy", _numpy_kernels
    return "numba", _numba_kernels


NAME, kernels = _load()


def get(name=None):
    """Return the kernel module for ``name`` (default: the active backend)."""
    if name is None:
        return kernels
    if name == "numpy":
        return _numpy_kernels
    if name == "numba":
        from . import _numba_kernels
        return _numba_kernels
    raise ValueError(f"unknown backend {name!r}")
