"""Overlap-matrix regularization by SVD truncation and the reduced eigenproblem."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllTruncatedError
from .linalg import eig_general, svd


@dataclass(frozen=True)
class RegularizationReport:
    singular_values: np.ndarray
    retained: np.ndarray
    sigma: float

    @property
    def n_retained(self) -> int:
        return len(self.retained)


def regularize(T: np.ndarray, S: np.ndarray, sigma: float):
    """Project ``T`` and ``S`` onto the SVD basis of ``S``, keeping singular values ``> sigma``.

    With ``S = U diag(s) Vh`` this returns ``U^H T Vh^H`` and ``U^H S Vh^H``
    restricted to the retained indices, together with a report.
    """
    if T.shape != S.shape or T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError(f"T and S must be square and of equal shape, got {T.shape} and {S.shape}")
    if sigma < 0:
        raise ValueError(f"threshold must be non-negative, got {sigma}")
    U, s, Vh = svd(S)
    retained = np.flatnonzero(s > sigma)
    report = RegularizationReport(singular_values=s, retained=retained, sigma=sigma)
    if retained.size == 0:
        raise AllTruncatedError(f"all {len(s)} singular values <= {sigma:g}; threshold exceeds the overlap spectrum")
    Ur = U[:, retained]
    Vr = Vh[retained, :].conj().T
    t_red = Ur.conj().T @ T @ Vr
    s_red = Ur.conj().T @ S @ Vr
    return t_red, s_red, report


def solve_reduced(t_red: np.ndarray, s_red: np.ndarray) -> np.ndarray:
    """Eigenvalues of ``D^-1/2 T D^-1/2`` where ``D`` is the (positive) diagonal of the projected ``S``."""
    d = np.real(np.diag(s_red))
    if np.any(d <= 0):
        raise ValueError("projected overlap matrix must have a positive diagonal")
    w = 1.0 / np.sqrt(d)
    return eig_general(w[:, None] * t_red * w[None, :])
