"""Scoring kernels: compiled extension when built, pure Python otherwise.

Set CLAIMCHECK_PURE_PYTHON=1 to force the fallback (used by tests and the
benchmark to compare both implementations).
"""

import os

if os.environ.get("CLAIMCHECK_PURE_PYTHON") == "1":
    from claimcheck._kernels._bm25_py import accumulate_term

    KERNEL_BACKEND = "python"
else:
    try:
        from claimcheck._kernels._bm25_cy import accumulate_term

        KERNEL_BACKEND = "cython"
    except ImportError:
        from claimcheck._kernels._bm25_py import accumulate_term

        KERNEL_BACKEND = "python"

__all__ = ["accumulate_term", "KERNEL_BACKEND"]
