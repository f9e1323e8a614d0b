"""Kernel backend selection.

Hot numeric kernels exist twice: a numba @njit scalar-loop version
(`kernels_numba`) and a pure-numpy vectorized version (`kernels_numpy`).
The env var SMOLT_NUMBA picks the backend:

    unset / "1" / "true"  -> numba if importable, else numpy
    "0" / "false" / "off" -> numpy, always
    "require"             -> numba, ImportError if unavailable

Both backends implement identical math; they agree to ~1e-12 relative
(floating-point summation order differs). Within one backend results are
bit-reproducible.
"""

import os

_flag = os.environ.get("SMOLT_NUMBA", "").strip().lower()

if _flag in ("0", "false", "off", "no"):
    from . import kernels_numpy as K

    BACKEND = "numpy"
elif _flag == "require":
    from . import kernels_numba as K

    BACKEND = "numba"
else:
    try:
        from . import kernels_numba as K

        BACKEND = "numba"
    except ImportError:
        from . import kernels_numpy as K

        BACKEND = "numpy"

__all__ = ["K", "BACKEND"]
