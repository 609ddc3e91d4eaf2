"""Block Krylov subspace projector driver.

The Krylov basis is ``{U(tau)^l |ref_b>}`` for ``l = 0..K`` and ``b = 0..B-1``,
ordered ``l``-major.  On a linear time grid every overlap and propagated
overlap reduces to a block

    A^(m)_{ij} = <ref_i| U(m tau) |ref_j>,   A^(-m) = (A^(m))^H,

so that ``S`` has block ``A^(c-l)`` and ``T`` has block ``A^(c-l+1)`` at block
position ``(l, c)``.  Only ``A^(0) .. A^(K+1)`` are ever measured.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Protocol

import numpy as np

from .errors import AllTruncatedError, ElementError, SolverError
from .expectation import Exact, MeasurementModel, make_backend
from .pauli import NormalizationRecord, PauliHamiltonian, count_matrix_elements, normalize
from .regularization import RegularizationReport, regularize, solve_reduced
from .statevector import ExactPropagator

log = logging.getLogger(__name__)

CHEMICAL_ACCURACY = 1.6e-3  # Hartree


class ElementBackend(Protocol):
    def element(self, b_i: int, b_j: int, k: int) -> complex: ...


class CountingBackend:
    """Wraps a backend and records every element request in order."""

    def __init__(self, backend: ElementBackend):
        self.backend = backend
        self.calls: list[tuple[int, int, int]] = []

    @property
    def n_calls(self) -> int:
        return len(self.calls)

    def element(self, b_i: int, b_j: int, k: int) -> complex:
        self.calls.append((b_i, b_j, k))
        return self.backend.element(b_i, b_j, k)


@dataclass
class ElementCache:
    B: int
    tau: float
    blocks: dict[int, np.ndarray] = field(default_factory=dict)

    def block(self, m: int) -> np.ndarray:
        """``A^(m)``; negative ``m`` is the conjugate transpose of ``A^(-m)``."""
        try:
            return self.blocks[m] if m >= 0 else self.blocks[-m].conj().T
        except KeyError:
            raise KeyError(f"block A^({abs(m)}) has not been evaluated") from None


@dataclass(frozen=True)
class KrylovMatrices:
    T: np.ndarray
    S: np.ndarray


@dataclass(frozen=True)
class QbkspConfig:
    """Run parameters.  Energies and tolerances are in Hartree, ``tau`` in atomic time units."""

    references: tuple
    tau: float
    K_max: int
    model: MeasurementModel = Exact()
    sigma: float = 1e-10
    per_state_tolerance: float = 1e-4
    n_target: int = 5
    degeneracy_cluster_tol: float = CHEMICAL_ACCURACY
    real_refs: bool | None = None
    orthogonal_refs: bool = False
    spurious_cutoff: float = 0.5
    stop_when_converged: bool = True

    def __post_init__(self):
        refs = tuple(np.ascontiguousarray(r, dtype=np.complex128) for r in self.references)
        object.__setattr__(self, "references", refs)
        if not refs:
            raise ValueError("at least one reference state is required")
        dims = {r.shape for r in refs}
        if len(dims) != 1:
            raise ValueError(f"references have differing shapes {sorted(dims)}")
        for b, r in enumerate(refs):
            if abs(np.linalg.norm(r) - 1.0) > 1e-10:
                raise ValueError(f"reference {b} is not normalized")
        if not 0 < self.tau <= math.pi:
            raise ValueError(f"tau must lie in (0, pi], got {self.tau}")
        if self.K_max < 0:
            raise ValueError("K_max must be non-negative")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.n_target < 1:
            raise ValueError("n_target must be positive")

    @property
    def B(self) -> int:
        return len(self.references)


@dataclass(frozen=True)
class FrozenLevel:
    energy: float
    multiplicity: int
    iteration: int


@dataclass(frozen=True)
class SpectrumEstimate:
    iteration: int
    n_elements: int
    energies: np.ndarray
    abs_lambdas: np.ndarray
    raw_lambdas: np.ndarray
    spurious: np.ndarray
    levels: tuple[tuple[float, int], ...] = ()
    converged: tuple[bool, ...] = ()
    frozen: tuple[FrozenLevel, ...] = ()
    report: RegularizationReport | None = None
    error: str | None = None
    n_target: int = 0

    @property
    def done(self) -> bool:
        """At least ``n_target`` distinct levels have been frozen."""
        return self.n_target > 0 and len(self.frozen) >= self.n_target


def references_are_real(references, ham: PauliHamiltonian | None = None) -> bool:
    real = all(np.all(np.imag(r) == 0) for r in references)
    return real and (ham is None or ham.is_real())


def evaluate_block(k: int, config: QbkspConfig, backend: ElementBackend) -> np.ndarray:
    """Measure ``A^(k)`` using unit diagonals, Hermiticity of ``A^(0)`` and, for real
    references and Hamiltonians, complex symmetry of ``A^(k)``."""
    if k < 0:
        raise ValueError("block index must be non-negative")
    B = config.B
    block = np.zeros((B, B), dtype=np.complex128)

    def measure(i, j):
        try:
            return backend.element(i, j, k)
        except ElementError:
            raise
        except Exception as exc:
            raise ElementError(str(exc), i, j, k) from exc

    if k == 0:
        np.fill_diagonal(block, 1.0)
        if not config.orthogonal_refs:
            for i in range(B):
                for j in range(i + 1, B):
                    block[i, j] = measure(i, j)
                    block[j, i] = np.conj(block[i, j])
        return block
    for i in range(B):
        for j in range(B):
            if config.real_refs and j < i:
                block[i, j] = block[j, i]
            else:
                block[i, j] = measure(i, j)
    return block


def assemble(cache: ElementCache, K: int) -> KrylovMatrices:
    """Block-Toeplitz ``T`` and ``S`` of size ``B(K+1)`` from blocks ``A^(0) .. A^(K+1)``."""
    B = cache.B
    for m in range(K + 2):
        if m not in cache.blocks:
            raise KeyError(f"block A^({m}) missing; evaluate blocks 0..{K + 1} first")
    n = B * (K + 1)
    S = np.empty((n, n), dtype=np.complex128)
    T = np.empty((n, n), dtype=np.complex128)
    for r in range(K + 1):
        for c in range(K + 1):
            S[r * B:(r + 1) * B, c * B:(c + 1) * B] = cache.block(c - r)
            T[r * B:(r + 1) * B, c * B:(c + 1) * B] = cache.block(c - r + 1)
    return KrylovMatrices(T=T, S=S)


def extract_energies(lambdas, tau: float, record: NormalizationRecord, spurious_cutoff: float = 0.5):
    """Map propagator eigenvalues to energies ``(-arg(lambda)/tau) * scale + shift``.

    Eigenvalues further than ``spurious_cutoff`` from the unit circle are returned
    separately.  Returns ``(energies, moduli, spurious)`` with energies ascending.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    lambdas = np.asarray(lambdas, dtype=np.complex128)
    mod = np.abs(lambdas)
    ok = np.abs(mod - 1.0) <= spurious_cutoff
    phase = np.angle(lambdas[ok])
    phase = np.where(phase >= math.pi, phase - 2 * math.pi, phase)
    energies = record.denormalize(-phase / tau)
    order = np.argsort(energies, kind="stable")
    return energies[order], mod[ok][order], lambdas[~ok]


def cluster_levels(energies, tol: float) -> list[tuple[float, int]]:
    """Group sorted energies whose neighbours lie within ``tol``; returns ``(mean, count)`` pairs."""
    levels: list[list[float]] = []
    for e in np.sort(np.asarray(energies, dtype=float)):
        if levels and e - levels[-1][-1] <= tol:
            levels[-1].append(e)
        else:
            levels.append([e])
    return [(float(np.mean(g)), len(g)) for g in levels]


def _nearest(value: float, candidates: list[float]) -> float | None:
    best = None
    for c in candidates:  # ascending, so strict '<' keeps the lower energy on ties
        if best is None or abs(c - value) < abs(best - value):
            best = c
    return best


def cluster_and_track(history: list[SpectrumEstimate], estimate: SpectrumEstimate, config: QbkspConfig) -> SpectrumEstimate:
    """Cluster ``estimate`` into distinct levels and freeze newly converged ones.

    A level converges when the nearest level of the previous iteration is within
    ``per_state_tolerance``; its energy and multiplicity are then frozen and never
    revised.  ``converged`` flags which of the lowest ``n_target`` current levels
    are frozen.
    """
    tol = config.degeneracy_cluster_tol
    levels = cluster_levels(estimate.energies, tol)
    prev = history[-1] if history else None
    frozen = list(prev.frozen) if prev is not None else []
    if prev is not None and prev.levels and prev.error is None:
        prev_energies = [e for e, _ in prev.levels]
        for e, mult in levels:
            if any(abs(e - f.energy) <= tol for f in frozen):
                continue
            match = _nearest(e, prev_energies)
            if match is not None and abs(e - match) <= config.per_state_tolerance:
                frozen.append(FrozenLevel(e, mult, estimate.iteration))
    frozen.sort(key=lambda f: f.energy)
    targets = levels[: config.n_target]
    converged = tuple(any(abs(e - f.energy) <= tol for f in frozen) for e, _ in targets)
    if len(targets) < config.n_target:
        converged += (False,) * (config.n_target - len(targets))
    return replace(estimate, levels=tuple(levels), converged=converged, frozen=tuple(frozen),
                   n_target=config.n_target)


def run_qbksp(
    config: QbkspConfig,
    ham: PauliHamiltonian,
    *,
    backend: ElementBackend | None = None,
    propagator: ExactPropagator | None = None,
    normalization: tuple[PauliHamiltonian, NormalizationRecord] | None = None,
) -> list[SpectrumEstimate]:
    """Iterate ``k = 0..K_max``: measure the next block, assemble, regularize, solve, track.

    With ``stop_when_converged`` the run ends once ``n_target`` distinct levels are frozen.

    ``ham`` is the physical Hamiltonian; it is normalized here unless a
    ``normalization`` pair is supplied.  ``propagator`` (built from the normalized
    Hamiltonian) may be shared between runs to skip the eigendecomposition.
    """
    ham_norm, record = normalization if normalization is not None else normalize(ham)
    if config.real_refs is None:
        config = replace(config, real_refs=references_are_real(config.references, ham))
    if backend is None:
        backend = make_backend(config.model, ham_norm, list(config.references), config.tau, prop=propagator)
    counter = CountingBackend(backend)
    cache = ElementCache(B=config.B, tau=config.tau)
    history: list[SpectrumEstimate] = []
    for k in range(config.K_max + 1):
        for m in range(k + 2):
            if m not in cache.blocks:
                cache.blocks[m] = evaluate_block(m, config, counter)
        expected = count_matrix_elements(config.B, k, bool(config.real_refs), config.orthogonal_refs)
        if counter.n_calls != expected:
            raise RuntimeError(f"iteration {k}: {counter.n_calls} element evaluations, expected {expected}")
        mats = assemble(cache, k)
        empty = np.zeros(0)
        try:
            t_red, s_red, report = regularize(mats.T, mats.S, config.sigma)
            lambdas = solve_reduced(t_red, s_red)
        except (AllTruncatedError, SolverError, ValueError) as exc:
            log.warning("iteration %d: %s", k, exc)
            est = SpectrumEstimate(k, counter.n_calls, empty, empty, empty.astype(complex), empty.astype(complex),
                                   error=f"{type(exc).__name__}: {exc}")
            est = replace(est, frozen=history[-1].frozen if history else (),
                          converged=(False,) * config.n_target, n_target=config.n_target)
            history.append(est)
            continue
        energies, moduli, spurious = extract_energies(lambdas, config.tau, record, config.spurious_cutoff)
        est = SpectrumEstimate(k, counter.n_calls, energies, moduli, lambdas, spurious, report=report)
        est = cluster_and_track(history, est, config)
        history.append(est)
        if config.stop_when_converged and est.done:
            break
    return history
