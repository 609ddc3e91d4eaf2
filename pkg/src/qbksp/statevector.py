"""Dense statevectors and real-time propagation.

States are plain 1-D ``complex128`` numpy arrays of length ``2**n``.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from . import kernels
from .linalg import eigh
from .pauli import NormalizationRecord, PauliHamiltonian, pauli_masks

log = logging.getLogger(__name__)

NORM_TOL = 1e-12


def n_qubits_of(psi: np.ndarray) -> int:
    dim = psi.shape[0]
    n = dim.bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise ValueError(f"statevector length {dim} is not a power of two >= 2")
    return n


def as_statevector(amps, tol: float = 1e-10) -> np.ndarray:
    """Validate ``amps`` as a unit-norm statevector and return it as complex128."""
    psi = np.ascontiguousarray(amps, dtype=np.complex128)
    if psi.ndim != 1:
        raise ValueError("statevector must be one-dimensional")
    n_qubits_of(psi)
    if not np.all(np.isfinite(psi)):
        raise ValueError("statevector has non-finite amplitudes")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"statevector norm {norm} deviates from 1")
    return psi


def basis_state(n_qubits: int, index: int = 0) -> np.ndarray:
    psi = np.zeros(1 << n_qubits, dtype=np.complex128)
    psi[index] = 1.0
    return psi


def inner(a: np.ndarray, b: np.ndarray) -> complex:
    """``<a|b>``, conjugating ``a``."""
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


class ExactPropagator:
    """``U(t) = exp(-i H t)`` through a one-time eigendecomposition of ``H``.

    ``ham`` should already be normalized; ``record`` maps its eigenvalues back to
    physical energies and is only carried along for convenience.
    """

    def __init__(self, ham: PauliHamiltonian, record: NormalizationRecord | None = None):
        dense = ham.to_dense()
        if ham.is_real():
            # real eigenvectors keep real references real in the eigenbasis
            dense = dense.real
        self.eigenvalues, self.eigenvectors = eigh(dense)
        self.norm_record = record
        self.n_qubits = ham.n_qubits

    @classmethod
    def from_dense(cls, matrix: np.ndarray, record: NormalizationRecord | None = None) -> "ExactPropagator":
        self = cls.__new__(cls)
        self.eigenvalues, self.eigenvectors = eigh(matrix)
        self.norm_record = record
        self.n_qubits = n_qubits_of(matrix[0])
        return self

    def to_eigenbasis(self, psi: np.ndarray) -> np.ndarray:
        return self.eigenvectors.conj().T @ psi

    def phases(self, t: float) -> np.ndarray:
        return np.exp(-1j * self.eigenvalues * t)

    def evolve(self, t: float, psi: np.ndarray) -> np.ndarray:
        return self.eigenvectors @ (self.phases(t) * self.to_eigenbasis(psi))

    def matrix(self, t: float) -> np.ndarray:
        return (self.eigenvectors * self.phases(t)) @ self.eigenvectors.conj().T


def evolve_exact(prop: ExactPropagator, t: float, psi: np.ndarray) -> np.ndarray:
    if not math.isfinite(t):
        raise ValueError("evolution time must be finite")
    return prop.evolve(t, psi)


def apply_pauli_exponential(label: str, theta: float, psi: np.ndarray) -> np.ndarray:
    """Return ``exp(-i theta P) psi`` without forming ``P``; ``psi`` is left untouched."""
    if 1 << len(label) != psi.shape[0]:
        raise ValueError(f"Pauli string of length {len(label)} does not act on a state of length {psi.shape[0]}")
    out = np.array(psi, dtype=np.complex128, copy=True, order="C")
    flip, pmask, n_y = pauli_masks(label)
    return kernels.apply_pauli_rotation(out, flip, pmask, n_y, float(theta))


class TrotterPlan:
    """Precomputed masks for second-order (Strang) splitting of a Pauli Hamiltonian.

    Terms are exponentiated in the Hamiltonian's construction order, then in
    reverse order, each with half the step.
    """

    def __init__(self, ham: PauliHamiltonian):
        self.n_qubits = ham.n_qubits
        masks = [pauli_masks(s) for _, s in ham.terms]
        self.flips = np.array([m[0] for m in masks], dtype=np.uint64)
        self.pmasks = np.array([m[1] for m in masks], dtype=np.uint64)
        self.n_ys = np.array([m[2] for m in masks], dtype=np.int64)
        self.coeffs = np.array([c for c, _ in ham.terms], dtype=np.float64)

    @staticmethod
    def step_sizes(t: float, dt: float) -> list[float]:
        if not dt > 0:
            raise ValueError(f"Trotter step must be positive, got {dt}")
        if t < 0:
            raise ValueError(f"evolution time must be non-negative, got {t}")
        if t == 0:
            return []
        n = math.ceil(t / dt - 1e-12)
        steps = [dt] * (n - 1)
        steps.append(t - dt * (n - 1))
        return steps

    def sequence(self, t: float, dt: float):
        """Rotation sequence (flips, pmasks, n_ys, thetas) covering total time ``t``."""
        m = len(self.coeffs)
        fwd = np.arange(m)
        order = np.concatenate([fwd, fwd[::-1]])
        idx, thetas = [], []
        for h in self.step_sizes(t, dt):
            idx.append(order)
            thetas.append(self.coeffs[order] * (h / 2))
        if not idx:
            empty = np.zeros(0)
            return self.flips[:0], self.pmasks[:0], self.n_ys[:0], empty
        idx = np.concatenate(idx)
        thetas = np.concatenate(thetas)
        # merge adjacent repeats of the same term (the palindrome centre and step joints)
        keep = np.ones(len(idx), dtype=bool)
        merged = thetas.copy()
        for j in range(len(idx) - 1, 0, -1):
            if idx[j] == idx[j - 1]:
                merged[j - 1] += merged[j]
                keep[j] = False
        idx, merged = idx[keep], merged[keep]
        return self.flips[idx], self.pmasks[idx], self.n_ys[idx], merged

    def evolve(self, t: float, dt: float, psi: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        out = np.array(psi, dtype=np.complex128, copy=True, order="C") if out is None else out
        flips, pmasks, n_ys, thetas = self.sequence(t, dt)
        return kernels.apply_rotation_sequence(out, flips, pmasks, n_ys, np.ascontiguousarray(thetas))


def evolve_trotter2(ham: PauliHamiltonian, t: float, dt: float, psi: np.ndarray) -> np.ndarray:
    """Second-order Trotterized ``exp(-i H t) psi`` with ``ceil(t/dt)`` steps, the last one shortened."""
    return TrotterPlan(ham).evolve(t, dt, psi)


def load_statevector(path, warn_tol: float = 1e-6) -> np.ndarray:
    """Read ``<re> <im>`` lines; the result is renormalized."""
    amps = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected '<re> <im>'")
            amps.append(complex(float(parts[0]), float(parts[1])))
    psi = np.array(amps, dtype=np.complex128)
    n_qubits_of(psi)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError(f"{path}: zero statevector")
    if abs(norm - 1) > warn_tol:
        log.warning("%s: statevector norm %.3g renormalized to 1", path, norm)
    return psi / norm


def save_statevector(path, psi: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a in psi:
            fh.write(f"{float(a.real)!r} {float(a.imag)!r}\n")
