"""Dense eigen- and singular-value kernels for the small matrices of the pipeline.

Thin contract-checking wrappers over LAPACK (via numpy).  Matrices here are at
most a few hundred rows, so plain O(n^3) dense routines are used throughout.
"""

from __future__ import annotations

import numpy as np

from .errors import SolverError

HERMITIAN_RTOL = 1e-12


def _check_finite(a: np.ndarray) -> None:
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")


def _check_square(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")


def eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""
    a = np.asarray(a)
    _check_square(a)
    _check_finite(a)
    scale = np.linalg.norm(a)
    if np.linalg.norm(a - a.conj().T) > HERMITIAN_RTOL * max(scale, 1.0):
        raise ValueError("matrix is not Hermitian")
    try:
        return np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"Hermitian eigensolver failed: {exc}") from exc


def svd(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``a = U @ diag(sigma) @ Vh`` with ``sigma`` descending."""
    a = np.asarray(a)
    _check_finite(a)
    try:
        return np.linalg.svd(a)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"SVD failed to converge: {exc}") from exc


def eig_general(a: np.ndarray) -> np.ndarray:
    """Eigenvalues of a general complex square matrix (Hessenberg QR via LAPACK ``geev``)."""
    a = np.asarray(a)
    _check_square(a)
    _check_finite(a)
    if a.shape[0] == 0:
        return np.zeros(0, dtype=np.complex128)
    try:
        return np.linalg.eigvals(a.astype(np.complex128))
    except np.linalg.LinAlgError as exc:
        # geev reports the failing index; QR sweeps are capped at 30 per eigenvalue
        raise SolverError(f"eigensolver did not converge: {exc}", iterations=30 * a.shape[0]) from exc
