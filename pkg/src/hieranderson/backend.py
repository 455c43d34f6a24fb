"""Kernel backend selection.

The hot numeric kernels exist twice: compiled with numba (default) and as
pure-numpy fallbacks.  Set HIERANDERSON_BACKEND=numpy to force the fallback,
HIERANDERSON_BACKEND=numba to require the compiled path (raises if numba is
missing).  The choice affects speed and last-ulp rounding only; run
`python benchmarks/compare_backends.py` for a side-by-side timing.
"""

import os

_choice = os.environ.get("HIERANDERSON_BACKEND", "auto").lower()

if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"HIERANDERSON_BACKEND={_choice!r}: expected 'numba', 'numpy' or 'auto'"
    )

if _choice in ("auto", "numba"):
    try:
        from . import _kernels_numba as _impl

        USING_NUMBA = True
    except ImportError:
        if _choice == "numba":
            raise
        from . import _kernels_numpy as _impl

        USING_NUMBA = False
else:
    from . import _kernels_numpy as _impl

    USING_NUMBA = False

BACKEND_NAME = "numba" if USING_NUMBA else "numpy"

tridiagonalize = _impl.tridiagonalize
ql_tridiag = _impl.ql_tridiag
rank_one_update = _impl.rank_one_update
hier_levels = _impl.hier_levels
