"""Select the compiled kernels when available, else the NumPy fallback.

Set ``VIDE_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
history_sum = _kernels_py.history_sum
series_mul = _kernels_py.series_mul

if os.environ.get("VIDE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        BACKEND = "compiled"
        history_sum = _compiled.history_sum
        series_mul = _compiled.series_mul

__all__ = ["BACKEND", "history_sum", "series_mul"]
