"""Hull kernel with compiled core and pure-Python fallback.

The compiled extension is used when importable; set GRENLIM_PURE_PYTHON=1
to force the fallback. ``BACKEND`` records which one is active.
"""

import os

if os.environ.get("GRENLIM_PURE_PYTHON"):
    from ._hull_py import upper_hull_indices

    BACKEND = "python"
else:
    try:
        from ._hull import upper_hull_indices

        BACKEND = "cython"
    except ImportError:
        from ._hull_py import upper_hull_indices

        BACKEND = "python"

__all__ = ["upper_hull_indices", "BACKEND"]
