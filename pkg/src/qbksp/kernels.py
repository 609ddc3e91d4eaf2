"""Kernel selection: compiled extension when importable, numpy otherwise.

Set ``QBKSP_PURE_PYTHON=1`` to force the numpy fallback.
"""

from __future__ import annotations

import os

from . import _pauli_py

BACKEND = "python"
if os.environ.get("QBKSP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._ext import pauli_kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pauli_py
else:
    _impl = _pauli_py

apply_pauli_rotation = _impl.apply_pauli_rotation
apply_rotation_sequence = _impl.apply_rotation_sequence

__all__ = ["BACKEND", "apply_pauli_rotation", "apply_rotation_sequence"]
