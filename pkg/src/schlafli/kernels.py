"""Backend selection for the hot kernels.

The compiled extension is used when it imports cleanly, unless the
environment variable SCHLAFLI_PURE_PYTHON is set to a non-empty value
other than "0".
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("SCHLAFLI_PURE_PYTHON", "0") in ("", "0"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

inside_halfspaces = _impl.inside_halfspaces
winding_numbers = _impl.winding_numbers

__all__ = ["BACKEND", "inside_halfspaces", "winding_numbers"]
