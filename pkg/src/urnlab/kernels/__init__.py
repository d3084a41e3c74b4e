"""Hot-loop kernels: compiled extension when available, numpy otherwise.

Set URNLAB_FORCE_FALLBACK=1 to skip the compiled backend (used by the
benchmark and the backend-equivalence tests).
"""

import os

if os.environ.get("URNLAB_FORCE_FALLBACK"):
    from . import _fallback as _impl
    BACKEND = "numpy"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        from . import _fallback as _impl
        BACKEND = "numpy"

dp_advance_1d = _impl.dp_advance_1d
dp_advance_2d = _impl.dp_advance_2d
build_paths = _impl.build_paths
