"""Hot kernels with a compiled core and a pure-Python fallback.

The compiled extension is used when it imports; set ``NESTKIT_PURE_PYTHON=1``
to force the fallback.  ``BACKEND`` names the active implementation.
"""

import os

from . import _fallback as fallback

try:
    if os.environ.get("NESTKIT_PURE_PYTHON", "") == "1":
        raise ImportError("pure-Python kernels requested")
    from . import _compiled as compiled
except ImportError:
    compiled = None

_impl = compiled if compiled is not None else fallback
BACKEND = "compiled" if compiled is not None else "python"

replay = _impl.replay
log_trapezium_weights = _impl.log_trapezium_weights
slice_walk = _impl.slice_walk
random_walk = _impl.random_walk

__all__ = ["BACKEND", "fallback", "compiled", "replay", "log_trapezium_weights",
           "slice_walk", "random_walk"]
