"""Pauli-string Hamiltonians.

A Hamiltonian is stored as a canonical list of ``(coefficient, string)`` terms,
where ``string`` is a label such as ``"XIZ"``.  Character ``j`` of the label acts
on the qubit that is most significant in the computational basis index, so the
dense matrix of ``"XZ"`` is ``kron(X, Z)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import HamiltonianParseError, ModelError

PAULI_LABELS = frozenset("IXYZ")

__all__ = [
    "PauliHamiltonian",
    "NormalizationRecord",
    "pauli_masks",
    "build_heisenberg",
    "parse_hamiltonian",
    "load_hamiltonian",
    "normalize",
    "count_matrix_elements",
    "count_circuits",
]


def pauli_masks(label: str) -> tuple[int, int, int]:
    """Return ``(flip_mask, phase_mask, n_y)`` for a Pauli label.

    Acting on a basis state ``|x>`` the string gives
    ``i**n_y * (-1)**popcount(x & phase_mask) * |x ^ flip_mask>``.
    """
    n = len(label)
    flip = phase = 0
    n_y = 0
    for j, op in enumerate(label):
        bit = 1 << (n - 1 - j)
        if op == "X":
            flip |= bit
        elif op == "Y":
            flip |= bit
            phase |= bit
            n_y += 1
        elif op == "Z":
            phase |= bit
        elif op != "I":
            raise ValueError(f"invalid Pauli label {op!r} in {label!r}")
    return flip, phase, n_y


def pauli_action(label: str, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Permutation and phases such that ``(P @ psi) == (phase * psi)[perm]``."""
    flip, pmask, n_y = pauli_masks(label)
    x = np.arange(dim, dtype=np.int64)
    sign = 1 - 2 * (np.bitwise_count(x & pmask) & 1).astype(np.int64)
    return x ^ flip, (1j**n_y) * sign.astype(np.complex128)


@dataclass(frozen=True)
class NormalizationRecord:
    """Affine map between normalized and physical energies, ``E = E_norm * scale + shift``."""

    scale: float
    shift: float

    def denormalize(self, e_norm):
        return e_norm * self.scale + self.shift

    def normalize(self, energy):
        return (energy - self.shift) / self.scale


@dataclass(frozen=True)
class PauliHamiltonian:
    """Real-weighted sum of Pauli strings.

    Construct through :meth:`from_terms` to get merged, zero-free terms.
    ``metadata`` carries free-form provenance (e.g. lattice boundary conditions).
    """

    n_qubits: int
    terms: tuple[tuple[float, str], ...]
    metadata: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[float, str]], n_qubits: int | None = None, metadata: dict | None = None):
        merged: dict[str, float] = {}
        for coeff, label in terms:
            label = label.upper()
            if not label or set(label) - PAULI_LABELS:
                raise ValueError(f"invalid Pauli string {label!r}")
            if n_qubits is None:
                n_qubits = len(label)
            elif len(label) != n_qubits:
                raise ValueError(f"Pauli string {label!r} has length {len(label)}, expected {n_qubits}")
            if isinstance(coeff, complex):
                if coeff.imag != 0:
                    raise ValueError(f"coefficient of {label} is not real: {coeff}")
                coeff = coeff.real
            merged[label] = merged.get(label, 0.0) + float(coeff)
        if n_qubits is None:
            raise ModelError("Hamiltonian has no terms")
        kept = tuple((c, s) for s, c in merged.items() if c != 0.0)
        return cls(n_qubits, kept, dict(metadata or {}))

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @property
    def identity_label(self) -> str:
        return "I" * self.n_qubits

    def coefficient(self, label: str) -> float:
        for c, s in self.terms:
            if s == label:
                return c
        return 0.0

    def is_real(self) -> bool:
        """True when the dense matrix is real, i.e. every term has an even number of Y factors."""
        return all(s.count("Y") % 2 == 0 for _, s in self.terms)

    def one_norm(self, include_identity: bool = False) -> float:
        ident = self.identity_label
        return float(sum(abs(c) for c, s in self.terms if include_identity or s != ident))

    def to_dense(self) -> np.ndarray:
        """Dense ``2**n x 2**n`` complex matrix."""
        dim = self.dim
        mat = np.zeros((dim, dim), dtype=np.complex128)
        cols = np.arange(dim)
        for c, label in self.terms:
            perm, phase = pauli_action(label, dim)
            # column x has its single nonzero at row x ^ flip
            mat[perm, cols] += c * phase
        return mat

    def apply(self, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi, dtype=np.complex128)
        for c, label in self.terms:
            perm, phase = pauli_action(label, psi.shape[0])
            out += c * (phase * psi)[perm]
        return out

    def scaled(self, factor: float, offset: float = 0.0) -> "PauliHamiltonian":
        """Return ``factor * (H - offset * I)``."""
        ident = self.identity_label
        terms = [(factor * c, s) for c, s in self.terms]
        if offset:
            terms.append((-factor * offset, ident))
        return PauliHamiltonian.from_terms(terms, self.n_qubits, self.metadata)

    def to_text(self) -> str:
        return "".join(f"{c!r} {s}\n" for c, s in self.terms)


def build_heisenberg(n_sites: int, coupling: Sequence[float] = (1.0, 1.0, 1.0)) -> PauliHamiltonian:
    """Open-chain Heisenberg model ``-sum_<ij> (Jx XX + Jy YY + Jz ZZ)``.

    Terms are ordered bond by bond, and X, Y, Z within a bond; this order is also
    the Trotter ordering.
    """
    if n_sites < 2:
        raise ModelError(f"Heisenberg chain needs at least 2 sites, got {n_sites}")
    if len(coupling) != 3:
        raise ModelError("coupling must have three components (Jx, Jy, Jz)")
    terms = []
    for i in range(n_sites - 1):
        for op, j in zip("XYZ", coupling):
            label = ["I"] * n_sites
            label[i] = label[i + 1] = op
            terms.append((-float(j), "".join(label)))
    return PauliHamiltonian.from_terms(
        terms, n_sites, {"model": "heisenberg", "boundary": "open", "coupling": tuple(map(float, coupling))}
    )


def parse_hamiltonian(text: str) -> PauliHamiltonian:
    """Parse ``<coefficient> <pauli string>`` lines; ``#`` starts a comment."""
    terms = []
    n_qubits = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise HamiltonianParseError(f"expected '<coefficient> <pauli string>', got {raw.strip()!r}", lineno)
        coeff_txt, label = parts[0], parts[1].upper()
        try:
            coeff = float(coeff_txt)
        except ValueError:
            if "j" in coeff_txt.lower():
                raise HamiltonianParseError(f"coefficient {coeff_txt!r} is not real", lineno) from None
            raise HamiltonianParseError(f"cannot parse coefficient {coeff_txt!r}", lineno) from None
        if not math.isfinite(coeff):
            raise HamiltonianParseError(f"coefficient {coeff_txt!r} is not finite", lineno)
        if set(label) - PAULI_LABELS:
            raise HamiltonianParseError(f"invalid Pauli string {label!r}", lineno)
        if n_qubits is None:
            n_qubits = len(label)
        elif len(label) != n_qubits:
            raise HamiltonianParseError(
                f"Pauli string {label!r} has length {len(label)}, previous lines have {n_qubits}", lineno
            )
        terms.append((coeff, label))
    if not terms:
        raise HamiltonianParseError("empty Hamiltonian")
    return PauliHamiltonian.from_terms(terms, n_qubits, {"model": "file"})


def load_hamiltonian(path) -> PauliHamiltonian:
    with open(path, encoding="utf-8") as fh:
        ham = parse_hamiltonian(fh.read())
    ham.metadata["source"] = str(path)
    return ham


def normalize(ham: PauliHamiltonian, exact: bool = False) -> tuple[PauliHamiltonian, NormalizationRecord]:
    """Rescale ``ham`` so its spectrum lies in ``[-1, 1]``.

    The default uses the identity coefficient as shift and the 1-norm of the
    remaining coefficients as scale, which bounds the spectral norm without
    diagonalizing.  ``exact=True`` maps the dense spectrum onto ``[-1, 1]``
    exactly (desk-scale systems only).
    """
    ident = ham.identity_label
    if all(s == ident for _, s in ham.terms):
        raise ModelError("Hamiltonian is proportional to the identity; spectrum is degenerate")
    if exact:
        evals = np.linalg.eigvalsh(ham.to_dense())
        lo, hi = float(evals[0]), float(evals[-1])
        if hi - lo <= 1e-14 * max(1.0, abs(hi)):
            raise ModelError("Hamiltonian spectrum is degenerate")
        shift, scale = 0.5 * (hi + lo), 0.5 * (hi - lo)
    else:
        shift = ham.coefficient(ident)
        scale = ham.one_norm()
    record = NormalizationRecord(scale=scale, shift=shift)
    return ham.scaled(1.0 / scale, shift), record


def count_matrix_elements(B: int, K: int, real_refs: bool = False, orthogonal_refs: bool = False) -> int:
    """Distinct expectation values needed for ``K`` Krylov iterations with ``B`` references."""
    if B < 1 or K < 0:
        raise ValueError("need B >= 1 and K >= 0")
    per_block = B * (B + 1) // 2 if real_refs else B * B
    overlaps = 0 if orthogonal_refs else B * (B - 1) // 2
    return per_block * (K + 1) + overlaps


def count_circuits(
    B: int, K: int, real_refs: bool = False, orthogonal_refs: bool = False, single_circuit_overlaps: bool = False
) -> int:
    """Hadamard-test circuits: two per element (real and imaginary part).

    With ``single_circuit_overlaps`` and real references, the real-valued
    ``k = 0`` overlaps are charged one circuit each instead of two.
    """
    n = 2 * count_matrix_elements(B, K, real_refs, orthogonal_refs)
    if single_circuit_overlaps and real_refs and not orthogonal_refs:
        n -= B * (B - 1) // 2
    return n
