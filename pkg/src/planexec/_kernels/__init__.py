"""Hot loops of the simulated search engine.

The compiled extension is used when it was built; otherwise the pure-Python
module is loaded. Set ``PLANEXEC_PURE_PYTHON=1`` to force the fallback.
"""
import os

IMPLEMENTATION = "python"

if os.environ.get("PLANEXEC_PURE_PYTHON", "") not in ("", "0"):
    from ._pykernels import accumulate_scores, best_window
else:
    try:
        from ._ckernels import accumulate_scores, best_window

        IMPLEMENTATION = "cython"
    except ImportError:  # extension not built
        from ._pykernels import accumulate_scores, best_window

__all__ = ["IMPLEMENTATION", "accumulate_scores", "best_window"]
