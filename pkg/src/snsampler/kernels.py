"""Backend selection for the hot per-observation kernels.

The compiled extension is preferred when importable; the numpy fallback is
functionally identical. Set SNSAMPLER_PURE_PYTHON=1 to force the fallback,
or pick explicitly via ``get_impl("cython"|"python")``.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py

try:
    from . import _kernels as _compiled  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - depends on the build environment
    _compiled = None

_force_python = os.environ.get("SNSAMPLER_PURE_PYTHON", "") not in ("", "0")

BACKEND: str = "cython" if (_compiled is not None and not _force_python) else "python"


def available_backends() -> tuple[str, ...]:
    if _compiled is not None:
        return ("cython", "python")
    return ("python",)


def get_impl(backend: str = "auto") -> ModuleType:
    """Return the kernel module for ``backend`` ("auto", "cython" or "python")."""
    if backend == "auto":
        backend = BACKEND
    if backend == "cython":
        if _compiled is None:
            raise ValueError("compiled kernels are not available in this install")
        return _compiled
    if backend == "python":
        return _kernels_py
    raise ValueError(f"unknown kernel backend {backend!r}")


poisson_fgh = get_impl().poisson_fgh
