"""Exception types raised by qbksp."""

from __future__ import annotations


class ModelError(ValueError):
    """Invalid model definition (lattice too small, degenerate spectrum, ...)."""


class HamiltonianParseError(ValueError):
    """Malformed Hamiltonian text. ``lineno`` is 1-based, or None for whole-file errors."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class SolverError(RuntimeError):
    """A dense eigensolver failed to converge."""

    def __init__(self, message: str, iterations: int | None = None):
        self.iterations = iterations
        super().__init__(message)


class AllTruncatedError(ValueError):
    """Every singular value of the overlap matrix fell below the threshold."""


class ElementError(RuntimeError):
    """A backend failed while evaluating a specific matrix element."""

    def __init__(self, message: str, b_i: int, b_j: int, k: int):
        self.b_i, self.b_j, self.k = b_i, b_j, k
        super().__init__(f"element (b_i={b_i}, b_j={b_j}, k={k}): {message}")


class ConfigError(ValueError):
    """Invalid run configuration."""
