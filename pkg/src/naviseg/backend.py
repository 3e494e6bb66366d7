"""Selects the compiled kernel when available, the NumPy fallback otherwise.

Set NAVISEG_BACKEND=python or NAVISEG_BACKEND=compiled to force a choice
(forcing 'compiled' raises if the extension was not built).
"""

from __future__ import annotations

import os

from . import _reference

_requested = os.environ.get("NAVISEG_BACKEND", "auto").strip().lower()

if _requested in ("auto", ""):
    try:
        from . import _speedups as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _reference
        BACKEND = "python"
elif _requested in ("python", "reference", "numpy"):
    _impl = _reference
    BACKEND = "python"
elif _requested in ("compiled", "cython", "speedups"):
    from . import _speedups as _impl
    BACKEND = "compiled"
else:
    raise ValueError(f"unknown NAVISEG_BACKEND value {_requested!r}")

hole_area = _impl.hole_area
solve_segment_dp = _impl.solve_segment_dp
evaluate_frames = _impl.evaluate_frames


def get_backend() -> str:
    """Name of the active kernel backend: 'compiled' or 'python'."""
    return BACKEND
