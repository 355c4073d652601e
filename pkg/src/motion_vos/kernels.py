"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when the
``MOTION_VOS_PURE`` environment variable is set to a non-empty value other
than ``0``, the numpy implementations are used.
"""

import os

from . import _kernels_py

_force_pure = os.environ.get("MOTION_VOS_PURE", "") not in ("", "0")

if _force_pure:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

warp_bilinear = _impl.warp_bilinear
lk_refine = _impl.lk_refine
ncc_search = _impl.ncc_search


def compiled_available() -> bool:
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return False
    return True


def get_backend(name: str):
    """Return the kernel module named ``"python"`` or ``"cython"``."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")
