"""Kernel backend selection.

The compiled extension is used when it imports; setting ``VIDTOK_PURE_PYTHON=1``
forces the numpy fallback.
"""

import os

from . import _kernels_py

try:
    if os.environ.get("VIDTOK_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python backend forced by VIDTOK_PURE_PYTHON")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

AVAILABLE = {"python": _kernels_py}
if _compiled is not None:
    AVAILABLE["cython"] = _compiled

DEFAULT = "cython" if _compiled is not None else "python"


def get(name=None):
    """Return the kernel module for ``name`` (``None`` means the default)."""
    if name is None:
        name = DEFAULT
    try:
        return AVAILABLE[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} not available; have {sorted(AVAILABLE)}") from None
