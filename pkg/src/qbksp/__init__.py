"""Multireference real-time Krylov eigensolver for Pauli-sum Hamiltonians.

The solver grows a block Krylov space ``{U(tau)^l |ref_b>}`` from a block of
reference states, measures only the ``B x B`` blocks ``<ref_i|U(k tau)|ref_j>``
and recovers energies from the eigenphases of the regularized projected
propagator.
"""

from __future__ import annotations

from .errors import (
    AllTruncatedError,
    ConfigError,
    ElementError,
    HamiltonianParseError,
    ModelError,
    SolverError,
)
from .expectation import Exact, Rounded, Shots
from .krylov import CHEMICAL_ACCURACY, QbkspConfig, SpectrumEstimate, run_qbksp
from .pauli import (
    NormalizationRecord,
    PauliHamiltonian,
    build_heisenberg,
    count_circuits,
    count_matrix_elements,
    load_hamiltonian,
    normalize,
    parse_hamiltonian,
)
from .references import build_block
from .regularization import regularize, solve_reduced
from .statevector import ExactPropagator, evolve_trotter2

__version__ = "0.1.0"

__all__ = [
    "AllTruncatedError",
    "CHEMICAL_ACCURACY",
    "ConfigError",
    "ElementError",
    "Exact",
    "ExactPropagator",
    "HamiltonianParseError",
    "ModelError",
    "NormalizationRecord",
    "PauliHamiltonian",
    "QbkspConfig",
    "Rounded",
    "Shots",
    "SolverError",
    "SpectrumEstimate",
    "build_block",
    "build_heisenberg",
    "count_circuits",
    "count_matrix_elements",
    "evolve_trotter2",
    "load_hamiltonian",
    "normalize",
    "parse_hamiltonian",
    "regularize",
    "run_qbksp",
    "solve_reduced",
]
