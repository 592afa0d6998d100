"""Pick the compiled kernels when available, otherwise the pure-Python ones.

Set ``IMUZEROS_BACKEND=python`` to force the fallback.
"""
import os

from . import _kernels_py

if os.environ.get("IMUZEROS_BACKEND", "").lower() == "python":
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        kernels = _kernels_py

BACKEND = "python" if kernels is _kernels_py else "cython"
