"""Hot-kernel backend selection.

The compiled extension is preferred when it imported cleanly; set
``PLANEHEAD_PURE_PYTHON=1`` to force the NumPy implementation (the
benchmark uses this to compare the two).
"""

import os

from . import numpy_backend

if os.environ.get("PLANEHEAD_PURE_PYTHON"):
    backend = numpy_backend
else:
    try:
        from . import _native as backend  # type: ignore[no-redef]
    except ImportError:
        backend = numpy_backend

IMPLEMENTATION = backend.IMPLEMENTATION
region_quantities = backend.region_quantities
geometry_residuals = backend.geometry_residuals
blend_apply = backend.blend_apply


def available_backends():
    out = {"numpy": numpy_backend}
    try:
        from . import _native

        out["cython"] = _native
    except ImportError:
        pass
    return out
