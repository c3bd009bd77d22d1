"""Kernel backend selection.

The compiled extension is used when it imports; set ``PODFORGE_PURE_PYTHON=1``
to force the pure-Python kernels.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels


def _load() -> tuple[ModuleType, str]:
    if os.environ.get("PODFORGE_PURE_PYTHON", "") not in ("", "0"):
        return _pykernels, "python"
    try:
        from . import _ckernels  # type: ignore[attr-defined]
    except ImportError:
        return _pykernels, "python"
    return _ckernels, "cython"


kernels, BACKEND = _load()


def get(name: str) -> ModuleType:
    """Return a specific backend module by name (``"python"`` or ``"cython"``)."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels  # type: ignore[attr-defined]

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def available() -> tuple[str, ...]:
    names = ["python"]
    try:
        get("cython")
    except ImportError:
        pass
    else:
        names.append("cython")
    return tuple(names)
