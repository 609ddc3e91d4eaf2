"""Reference-state blocks: random states with a prescribed overlap, or states read from files."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .statevector import load_statevector


@dataclass(frozen=True)
class ReferenceBlock:
    states: tuple
    provenance: tuple

    def __post_init__(self):
        if not self.states:
            raise ValueError("reference block is empty")
        if len({s.shape for s in self.states}) != 1:
            raise ValueError("reference states differ in dimension")
        if len(self.provenance) != len(self.states):
            raise ValueError("one provenance tag per state is required")

    @property
    def B(self) -> int:
        return len(self.states)

    def gram(self) -> np.ndarray:
        m = np.column_stack(self.states)
        return m.conj().T @ m


def random_with_overlap(target: np.ndarray, gamma: float, rng: np.random.Generator, real: bool = False) -> np.ndarray:
    """``gamma |target> + sqrt(1 - gamma^2) |r>`` with ``|r>`` Haar-random orthogonal to ``target``.

    ``real=True`` draws ``|r>`` from the real orthogonal complement (``target``
    should then be real too).
    """
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    target = np.asarray(target, dtype=np.complex128)
    target = target / np.linalg.norm(target)
    if gamma == 1:
        return target.copy()
    dim = target.shape[0]
    g = rng.standard_normal(dim)
    if not real:
        g = g + 1j * rng.standard_normal(dim)
    r = g - target * np.vdot(target, g)
    # a second pass keeps the residual orthogonal to round-off
    r = r - target * np.vdot(target, r)
    r /= np.linalg.norm(r)
    return gamma * target + np.sqrt(1.0 - gamma**2) * r


def oracle_levels(eigenvalues: np.ndarray, tol: float = 1e-8) -> list[list[int]]:
    """Group ascending eigenvalue indices into degenerate levels."""
    levels: list[list[int]] = []
    scale = max(1.0, float(np.max(np.abs(eigenvalues)))) if len(eigenvalues) else 1.0
    for i, e in enumerate(eigenvalues):
        if levels and e - eigenvalues[levels[-1][-1]] <= tol * scale:
            levels[-1].append(i)
        else:
            levels.append([i])
    return levels


def build_block(
    gammas,
    eigenvalues: np.ndarray,
    eigenvectors: np.ndarray,
    rng: np.random.Generator,
    real: bool = False,
) -> ReferenceBlock:
    """State ``b`` overlaps the ``b``-th lowest distinct oracle level with ``gammas[b]``.

    For a degenerate level the first oracle eigenvector of that level is the target.
    """
    gammas = list(gammas)
    levels = oracle_levels(eigenvalues)
    if len(gammas) > len(levels):
        raise ValueError(f"{len(gammas)} references requested but the oracle has only {len(levels)} levels")
    states, tags = [], []
    for b, gamma in enumerate(gammas):
        idx = levels[b][0]
        states.append(random_with_overlap(eigenvectors[:, idx], gamma, rng, real=real))
        tags.append(("random-overlap", float(gamma), b))
    return ReferenceBlock(tuple(states), tuple(tags))


def load_block(paths) -> ReferenceBlock:
    paths = list(paths)
    states = tuple(load_statevector(p) for p in paths)
    return ReferenceBlock(states, tuple(("file", str(p)) for p in paths))
