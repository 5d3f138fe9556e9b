"""Kernel backend selection.

The compiled extension ``_ckernels`` is used when it imports; otherwise the
pure-Python ``_pykernels`` fallback. Set ``CCBVP_PURE_PYTHON=1`` to force the
fallback.
"""
import os

from . import _pykernels

pykernels = _pykernels
ckernels = None

if os.environ.get("CCBVP_PURE_PYTHON", "") not in ("", "0"):
    kernels = _pykernels
else:
    try:
        from . import _ckernels as ckernels
    except ImportError:  # pragma: no cover - depends on the build
        ckernels = None
    kernels = ckernels if ckernels is not None else _pykernels

COMPILED = kernels is not _pykernels


def backend_name():
    return kernels.BACKEND
