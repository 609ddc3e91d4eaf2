"""Pure-numpy Pauli-rotation kernels (fallback for the compiled extension)."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=4096)
def _action(dim: int, flip: int, pmask: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.arange(dim, dtype=np.uint64)
    odd = (np.bitwise_count(x & np.uint64(pmask)) & 1).astype(bool)
    sign = np.where(odd, -1.0, 1.0)
    perm = (x ^ np.uint64(flip)).astype(np.intp)
    perm.flags.writeable = False
    sign.flags.writeable = False
    return perm, sign


def apply_pauli_rotation(psi: np.ndarray, flip: int, pmask: int, n_y: int, theta: float) -> np.ndarray:
    """In place: ``psi <- exp(-i theta P) psi`` for the Pauli string given by its masks."""
    perm, sign = _action(psi.shape[0], int(flip), int(pmask))
    c, s = np.cos(theta), np.sin(theta)
    mis = -1j * s * (1j ** (int(n_y) & 3))
    if flip == 0:
        psi *= c + mis * sign
    else:
        # (P psi)[x] = phase(x ^ flip) * psi[x ^ flip]
        p_psi = (sign * psi)[perm]
        psi *= c
        psi += mis * p_psi
    return psi


def apply_rotation_sequence(psi, flips, pmasks, n_ys, thetas) -> np.ndarray:
    """In place: apply ``exp(-i thetas[j] P_j)`` for j = 0, 1, ... in order."""
    for f, p, ny, th in zip(flips.tolist(), pmasks.tolist(), n_ys.tolist(), thetas.tolist()):
        apply_pauli_rotation(psi, f, p, ny, th)
    return psi
