"""Kernel backend selection.

The compiled extension ``reins._kernels`` is used when importable; otherwise,
or when the environment variable ``REINS_PURE_PYTHON`` is set to a non-empty
value other than ``0``, the pure-Python twin is used.  ``load("python")`` and
``load("compiled")`` return a specific backend regardless of the default.
"""

from __future__ import annotations

import importlib
import os
from types import ModuleType

_NAMES = {"compiled": "reins._kernels", "python": "reins._kernels_py"}


def load(name: str) -> ModuleType:
    if name not in _NAMES:
        raise ValueError(f"unknown backend {name!r}; expected one of {sorted(_NAMES)}")
    return importlib.import_module(_NAMES[name])


def available() -> list[str]:
    names = []
    for name in _NAMES:
        try:
            load(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select() -> tuple[str, ModuleType]:
    if os.environ.get("REINS_PURE_PYTHON", "") not in ("", "0"):
        return "python", load("python")
    try:
        return "compiled", load("compiled")
    except ImportError:
        return "python", load("python")


BACKEND, kernels = _select()
