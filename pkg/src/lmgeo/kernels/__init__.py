"""Hot numeric kernels, compiled when available.

The compiled extension is preferred; set ``LMGEO_PURE_PYTHON=1`` to force
the numpy fallback. ``BACKEND`` reports which one was loaded.
"""

import os

from lmgeo.kernels import _pykernels as python

compiled = None
if not os.environ.get("LMGEO_PURE_PYTHON"):
    try:
        from lmgeo.kernels import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None

_impl = compiled if compiled is not None else python
BACKEND = "compiled" if compiled is not None else "python"

haversine_matrix = _impl.haversine_matrix
route_lengths = _impl.route_lengths

__all__ = ["BACKEND", "compiled", "python", "haversine_matrix", "route_lengths"]
