"""Hot loops behind the exhaustive oracles, with a compiled and a fallback backend.

The Cython extension ``_ckernels`` is used when it was built and imports
cleanly; otherwise the numpy / pure-Python ``_pykernels`` take over. Setting
``RANKLAB_PURE_PYTHON=1`` forces the fallback. Both backends return identical
values (exactly for integer-valued losses, to 1e-12 for the float ones).
"""

from __future__ import annotations

import os

from . import _pykernels as python_backend

try:
    from . import _ckernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

LOSS_CODES = {"sum": 0, "prec": 1, "ap": 2, "auc": 3, "rr": 4, "pl": 5, "dcg": 6}


def _select():
    if compiled_backend is not None and not os.environ.get("RANKLAB_PURE_PYTHON"):
        return compiled_backend, "cython"
    return python_backend, "python"


_active, BACKEND = _select()

loss_grid = _active.loss_grid
max_shattered = _active.max_shattered
subadditivity_violations = _active.subadditivity_violations


def available_backends() -> dict:
    """Name -> module for every backend importable in this interpreter."""
    out = {"python": python_backend}
    if compiled_backend is not None:
        out["cython"] = compiled_backend
    return out


def max_shattered_any(rows, n_points: int, max_m: int) -> int:
    """Route to the compiled search when the domain fits in 64-bit masks."""
    if BACKEND == "cython" and n_points <= 64:
        return compiled_backend.max_shattered(rows, n_points, max_m)
    return python_backend.max_shattered(rows, n_points, max_m)
