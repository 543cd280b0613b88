"""Pick the compiled motion kernel when available.

Set ``HARMONIA_PURE_PYTHON=1`` to force the numpy fallback.
"""

from __future__ import annotations

import os

from . import _motion_py
from ._motion_py import F_AUG2, F_CROSS, F_HIDDEN, F_LT, F_OVERLAP, F_P5, F_P8, F_SEVENTH  # noqa: F401

python_motion_matrix = _motion_py.motion_matrix
compiled_motion_matrix = None

if os.environ.get("HARMONIA_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._motion import motion_matrix as compiled_motion_matrix  # type: ignore[no-redef]
    except ImportError:  # extension not built
        compiled_motion_matrix = None

motion_matrix = compiled_motion_matrix or python_motion_matrix
BACKEND = "compiled" if compiled_motion_matrix is not None else "python"
