"""Hot kernels with a compiled backend and a numpy fallback.

The compiled extension is used when it imports; set ``ARTIMANIP_KERNELS=python``
to force the fallback.  ``BACKEND`` names whichever was selected.
"""

from __future__ import annotations

import os

from . import _fallback

BACKGROUND = _fallback.BACKGROUND

_ext = None
if os.environ.get("ARTIMANIP_KERNELS", "").lower() not in ("python", "numpy", "fallback"):
    try:
        from . import _ckernels as _ext
    except ImportError:  # extension not built
        _ext = None

if _ext is not None:
    raycast = _ext.raycast
    local_pca = _ext.local_pca
    BACKEND = "cython"
else:
    raycast = _fallback.raycast
    local_pca = _fallback.local_pca
    BACKEND = "python"


def backends() -> dict:
    """Every importable backend keyed by name (used by tests and benchmarks)."""
    out = {"python": _fallback}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out


__all__ = ["BACKEND", "BACKGROUND", "backends", "local_pca", "raycast"]
