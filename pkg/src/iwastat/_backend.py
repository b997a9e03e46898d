"""Kernel backend selected at import: compiled extension, else pure Python."""

import os

if os.environ.get("IWASTAT_PURE"):
    from . import _pure as kernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:  # extension not built
        from . import _pure as kernels

BACKEND = "compiled" if kernels.__name__.endswith("_kernels") else "pure"
