"""Pick the simulation kernel at import time.

The compiled kernel is used when it was built and ``LEAKTWIN_PURE`` is not
set; otherwise the pure-Python one. Both share one calling convention.
"""

from __future__ import annotations

import os

from . import _pykernel

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

BACKENDS = {"python": _pykernel.run_kernel}
if _ckernel is not None:
    BACKENDS["cython"] = _ckernel.run_kernel

if os.environ.get("LEAKTWIN_PURE") or _ckernel is None:
    DEFAULT_BACKEND = "python"
else:
    DEFAULT_BACKEND = "cython"


def get_kernel(name: str | None = None):
    name = name or DEFAULT_BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; available: {sorted(BACKENDS)}") from None
