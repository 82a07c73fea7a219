"""Select the compiled subset scan when available.

Set ``OMP_SPARSE_PURE=1`` to force the numpy fallback.
"""
import os

from . import _fallback

BACKEND = "python"

if os.environ.get("OMP_SPARSE_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

rip_scan = _impl.rip_scan
block_extremes = _impl.block_extremes
