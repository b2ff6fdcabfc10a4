"""Kernel backend selection.

The compiled Cython module is preferred; the numpy fallback is used when the
extension was not built or when the environment variable
``ZWMSIM_PURE_PYTHON`` is set to a non-empty value other than ``0``.
"""

import os

from . import _kernels_py as python_backend

try:
    from . import _kernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

_force_pure = os.environ.get("ZWMSIM_PURE_PYTHON", "") not in ("", "0")

if compiled_backend is not None and not _force_pure:
    backend = compiled_backend
    BACKEND = "cython"
else:
    backend = python_backend
    BACKEND = "python"

bs_expand = backend.bs_expand

__all__ = ["BACKEND", "bs_expand", "compiled_backend", "python_backend"]
