"""Hot loops of the dbar solver: compiled when available, numpy otherwise.

``HB_KERNELS=python`` forces the fallback; ``HB_KERNELS=compiled`` makes a
missing extension an error.
"""

from __future__ import annotations

import os

from . import _pykernels

_choice = os.environ.get("HB_KERNELS", "auto").lower()
if _choice not in ("auto", "python", "compiled"):
    raise ImportError(f"HB_KERNELS must be auto, python or compiled, not {_choice!r}")

_impl = _pykernels
BACKEND = "python"
if _choice != "python":
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise

geometric_scan = _impl.geometric_scan
cauchy_direct = _impl.cauchy_direct

__all__ = ["BACKEND", "geometric_scan", "cauchy_direct"]
