"""Selects the compiled kernel core when available, else the numpy twin.

Set EXCBO_PURE_PYTHON=1 to force the fallback (used by the backend
parity tests and the benchmark script).
"""

import os

from . import _gpcore_py

if os.environ.get("EXCBO_PURE_PYTHON"):
    _impl = _gpcore_py
else:
    try:
        from . import _gpcore as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _gpcore_py

se_kernel = _impl.se_kernel
gp_mean_var = _impl.gp_mean_var


def active_backend() -> str:
    """Name of the implementation in use: "compiled" or "python"."""
    return _impl.BACKEND_NAME
