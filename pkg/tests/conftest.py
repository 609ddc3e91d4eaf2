from __future__ import annotations

from functools import reduce

import numpy as np
import pytest

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_pauli(label: str) -> np.ndarray:
    """Independent dense Pauli string: leftmost character is the leftmost Kronecker factor."""
    return reduce(np.kron, (PAULI[c] for c in label))


def dense_from_terms(terms) -> np.ndarray:
    return sum(c * kron_pauli(s) for c, s in terms)


def heisenberg_dense(n: int, coupling=(1.0, 1.0, 1.0)) -> np.ndarray:
    """Open-chain ferromagnetic-sign Heisenberg matrix from Kronecker products."""
    dim = 1 << n
    h = np.zeros((dim, dim), dtype=complex)
    for i in range(n - 1):
        for op, j in zip("XYZ", coupling):
            ops = [PAULI["I"]] * n
            ops[i] = ops[i + 1] = PAULI[op]
            h -= j * reduce(np.kron, ops)
    return h


def expm_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i h t)`` via scipy's Pade expm, independent of the eigendecomposition path."""
    from scipy.linalg import expm

    return expm(-1j * t * h)


def random_state(rng, dim, real=False):
    v = rng.standard_normal(dim) + (0 if real else 1j * rng.standard_normal(dim))
    return (v / np.linalg.norm(v)).astype(complex)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion; printed in the terminal summary."""

    def record(number: int, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES[number] = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[number])

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
