"""Kernel backend selection.

The compiled extension is preferred; set ``CCABOOT_PURE_PYTHON=1`` to force
the pure-Python fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py as python_kernels

compiled_kernels = None
if os.environ.get("CCABOOT_PURE_PYTHON") != "1":
    try:
        from . import _kernels as compiled_kernels  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on build
        compiled_kernels = None

_impl = compiled_kernels if compiled_kernels is not None else python_kernels

BACKEND: str = _impl.BACKEND
cosine_similarity = _impl.cosine_similarity
assignment_max = _impl.assignment_max

__all__ = ["BACKEND", "assignment_max", "cosine_similarity", "compiled_kernels", "python_kernels"]
