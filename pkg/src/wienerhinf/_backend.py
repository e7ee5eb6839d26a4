"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``WIENERHINF_PURE_PYTHON=1`` is set, the NumPy fallback
is used.  ``BACKEND`` names the active one.
"""
import os

if os.environ.get("WIENERHINF_PURE_PYTHON") == "1":
    from . import _pykernels as kernels

    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels

        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _pykernels as kernels

        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
