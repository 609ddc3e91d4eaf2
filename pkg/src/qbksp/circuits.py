"""Hadamard-test circuit variants for ``<beta|U(t)|alpha>`` and their full simulation.

Variant ``A`` prepares ``alpha`` unconditionally and applies controlled ``U`` and
controlled ``V_{beta alpha}^dagger``; variant ``B`` uses three ``|1>``-controlled
operations ``W_alpha, U, W_beta^dagger``; variant ``C`` uses ``|0>``-controlled
``W_alpha, U`` and a ``|1>``-controlled ``W_beta``.  The imaginary-part circuit
inserts ``S^dagger`` on the ancilla before the final Hadamard.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

VARIANTS = ("A", "B", "C")
PARTS = ("real", "imag")

# operand names used in controlled gates
PREP_ALPHA = "prepare_alpha"
PREP_BETA = "prepare_beta"
PREP_BETA_DAG = "prepare_beta_dagger"
V_DAG = "v_beta_alpha_dagger"
EVOLVE = "U"


@dataclass(frozen=True)
class Gate:
    name: str  # "H", "Sdg", "controlled", "prepare_alpha", "measure"
    operand: str | None = None
    control: int | None = None  # ancilla value that activates a controlled gate


@dataclass(frozen=True)
class CircuitDescription:
    variant: str
    part: str
    n_system_qubits: int
    gates: tuple[Gate, ...]

    def controlled_ops(self) -> list[tuple[str, int]]:
        return [(g.operand, g.control) for g in self.gates if g.name == "controlled"]


def build_circuit(variant: str, part: str, n_system_qubits: int) -> CircuitDescription:
    variant, part = variant.upper(), part.lower()
    if variant not in VARIANTS:
        raise ValueError(f"unknown circuit variant {variant!r}")
    if part not in PARTS:
        raise ValueError(f"part must be 'real' or 'imag', got {part!r}")
    gates = [Gate("H")]
    if variant == "A":
        gates += [Gate(PREP_ALPHA), Gate("controlled", EVOLVE, 1), Gate("controlled", V_DAG, 1)]
    elif variant == "B":
        gates += [
            Gate("controlled", PREP_ALPHA, 1),
            Gate("controlled", EVOLVE, 1),
            Gate("controlled", PREP_BETA_DAG, 1),
        ]
    else:
        gates += [
            Gate("controlled", PREP_ALPHA, 0),
            Gate("controlled", EVOLVE, 0),
            Gate("controlled", PREP_BETA, 1),
        ]
    if part == "imag":
        gates.append(Gate("Sdg"))
    gates += [Gate("H"), Gate("measure")]
    return CircuitDescription(variant, part, n_system_qubits, tuple(gates))


def transfer_unitary(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """A unitary ``V`` with ``V @ a == b`` for unit vectors ``a`` and ``b``.

    A Householder reflection onto ``b`` rotated so that its overlap with ``a`` is
    real, then the phase is restored; identity when ``a == b``.
    """
    dim = a.shape[0]
    ov = np.vdot(a, b)
    phase = ov / abs(ov) if abs(ov) > 0 else 1.0
    w = a - b / phase
    nw = np.vdot(w, w).real
    refl = np.eye(dim, dtype=np.complex128)
    if nw > 1e-28:
        refl -= (2.0 / nw) * np.outer(w, w.conj())
    return phase * refl


def preparation_unitary(psi: np.ndarray) -> np.ndarray:
    """``W`` with ``W |0...0> = psi``."""
    e0 = np.zeros_like(psi, dtype=np.complex128)
    e0[0] = 1.0
    return transfer_unitary(e0, psi)


def simulate_circuit_p0(
    desc: CircuitDescription,
    evolve: Callable[[np.ndarray], np.ndarray],
    alpha: np.ndarray,
    beta: np.ndarray,
) -> float:
    """Probability of reading ancilla ``|0>`` from a full ancilla+system statevector run.

    ``evolve`` applies the (exact or Trotterized) propagator to a system state.
    """
    dim = 1 << desc.n_system_qubits
    if alpha.shape != (dim,) or beta.shape != (dim,):
        raise ValueError("reference states do not match the circuit width")
    w_alpha = preparation_unitary(alpha)
    w_beta = preparation_unitary(beta)
    ops: dict[str, Callable[[np.ndarray], np.ndarray]] = {
        PREP_ALPHA: lambda v: w_alpha @ v,
        PREP_BETA: lambda v: w_beta @ v,
        PREP_BETA_DAG: lambda v: w_beta.conj().T @ v,
        EVOLVE: evolve,
    }
    if desc.variant == "A":
        v_dag = transfer_unitary(alpha, beta).conj().T
        ops[V_DAG] = lambda v: v_dag @ v

    # row c holds the system amplitudes with the ancilla in |c>
    state = np.zeros((2, dim), dtype=np.complex128)
    state[0, 0] = 1.0
    p0 = None
    for gate in desc.gates:
        if gate.name == "H":
            r0, r1 = state[0].copy(), state[1].copy()
            state[0] = (r0 + r1) / np.sqrt(2)
            state[1] = (r0 - r1) / np.sqrt(2)
        elif gate.name == "Sdg":
            state[1] *= -1j
        elif gate.name == PREP_ALPHA:
            state[0] = ops[PREP_ALPHA](state[0])
            state[1] = ops[PREP_ALPHA](state[1])
        elif gate.name == "controlled":
            state[gate.control] = ops[gate.operand](state[gate.control])
        elif gate.name == "measure":
            p0 = float(np.vdot(state[0], state[0]).real)
        else:
            raise ValueError(f"unknown gate {gate.name!r}")
    if p0 is None:
        raise ValueError("circuit has no measurement")
    return p0
