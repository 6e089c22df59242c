"""Hot-loop kernels: compiled extension when available, numpy fallback otherwise.

Set ``LEVELGEOM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pure

if os.environ.get("LEVELGEOM_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pure
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pure

BACKEND = _impl.BACKEND
mc_triangle_keys = _impl.mc_triangle_keys
curvature3 = _impl.curvature3

__all__ = ["BACKEND", "mc_triangle_keys", "curvature3"]
