"""Kernel backend selection.

The compiled extension is preferred when present; set MEDIAMIX_PURE_PYTHON=1
to force the NumPy/SciPy fallback (useful for debugging and benchmarking).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("MEDIAMIX_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _fastkernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND = "cython" if _impl is not _kernels_py else "python"

geometric_adstock = _impl.geometric_adstock
lagged_convolve = _impl.lagged_convolve
ridge_cd = _impl.ridge_cd
