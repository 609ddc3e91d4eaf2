"""Matrix elements ``<psi_beta|U(t)|psi_alpha>`` under the three measurement models.

* :class:`Exact` -- statevector value.
* :class:`Rounded` -- statevector value with each component rounded to a fixed
  number of decimal places.
* :class:`Shots` -- second-order Trotterized value, measured through the ancilla
  probabilities of a Hadamard-test variant with a finite shot budget per part.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Union

import numpy as np

from . import kernels
from .circuits import VARIANTS
from .errors import ElementError
from .pauli import PauliHamiltonian
from .statevector import ExactPropagator, TrotterPlan, evolve_trotter2

PART_REAL, PART_IMAG = 0, 1


@dataclass(frozen=True)
class Exact:
    name = "exact"


@dataclass(frozen=True)
class Rounded:
    precision: int

    name = "rounded"

    def __post_init__(self):
        if self.precision < 1:
            raise ValueError(f"precision must be >= 1, got {self.precision}")


@dataclass(frozen=True)
class Shots:
    n_shots: int
    trotter_dt: float
    variant: str = "B"
    seed: int = 0

    name = "shots"

    def __post_init__(self):
        if self.n_shots < 1:
            raise ValueError(f"n_shots must be >= 1, got {self.n_shots}")
        if not self.trotter_dt > 0:
            raise ValueError(f"trotter_dt must be positive, got {self.trotter_dt}")
        if self.variant.upper() not in VARIANTS:
            raise ValueError(f"unknown circuit variant {self.variant!r}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


MeasurementModel = Union[Exact, Rounded, Shots]


def exact_element(prop: ExactPropagator, t: float, beta: np.ndarray, alpha: np.ndarray) -> complex:
    if beta.shape != alpha.shape:
        raise ValueError(f"dimension mismatch: {beta.shape} vs {alpha.shape}")
    return complex(np.vdot(beta, prop.evolve(t, alpha)))


def _round_half_away(x: float, precision: int) -> float:
    q = Decimal(1).scaleb(-precision)
    return float(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP))


def round_element(z: complex, precision: int) -> complex:
    """Round real and imaginary parts independently, half away from zero, to ``precision`` decimals."""
    if precision < 1:
        raise ValueError(f"precision must be >= 1, got {precision}")
    return complex(_round_half_away(z.real, precision), _round_half_away(z.imag, precision))


def analytic_ancilla_p0(variant: str, part: str, value: complex) -> float:
    """Ancilla ``P(|0>)`` of a Hadamard-test variant for matrix element ``value``.

    Variant C reads the imaginary part with the opposite sign:
    ``P(1) - P(0) = Im(value)``.
    """
    if abs(value) > 1 + 1e-9:
        raise ValueError(f"|value| = {abs(value)} exceeds 1; not a unitary matrix element")
    variant, part = variant.upper(), part.lower()
    if variant not in VARIANTS:
        raise ValueError(f"unknown circuit variant {variant!r}")
    if part == "real":
        return 0.5 * (1.0 + value.real)
    if part == "imag":
        sign = -1.0 if variant == "C" else 1.0
        return 0.5 * (1.0 + sign * value.imag)
    raise ValueError(f"part must be 'real' or 'imag', got {part!r}")


def element_rng(seed: int, key: tuple[int, ...], part: int) -> np.random.Generator:
    """Independent stream for one circuit, keyed so results do not depend on evaluation order."""
    return np.random.default_rng([seed, *key, part])


def sample_value(model: Shots, value: complex, key: tuple[int, ...]) -> complex:
    """Binomial estimate of ``value`` from two Hadamard-test circuits of ``model.n_shots`` each."""
    # clip away round-off so the probabilities are valid
    mag = abs(value)
    if mag > 1.0:
        value = value / mag
    n = model.n_shots
    p_re = min(max(analytic_ancilla_p0(model.variant, "real", value), 0.0), 1.0)
    p_im = min(max(analytic_ancilla_p0(model.variant, "imag", value), 0.0), 1.0)
    n0_re = element_rng(model.seed, key, PART_REAL).binomial(n, p_re)
    n0_im = element_rng(model.seed, key, PART_IMAG).binomial(n, p_im)
    sign = -1.0 if model.variant.upper() == "C" else 1.0
    return complex(2.0 * n0_re / n - 1.0, sign * (2.0 * n0_im / n - 1.0))


def sampled_element(
    model: Shots,
    ham: PauliHamiltonian,
    t: float,
    alpha: np.ndarray,
    beta: np.ndarray,
    key: tuple[int, ...] = (),
) -> complex:
    """Shot-sampled estimate of ``<beta| U_trotter(t) |alpha>``."""
    value = complex(np.vdot(beta, evolve_trotter2(ham, t, model.trotter_dt, alpha)))
    return sample_value(model, value, key)


class ExactBackend:
    """Exact elements ``A^(k)_{ij} = <ref_i| U(k tau) |ref_j>`` from the eigenbasis expansion."""

    def __init__(self, prop: ExactPropagator, references: list[np.ndarray], tau: float):
        self.prop = prop
        self.tau = tau
        self.coeffs = prop.to_eigenbasis(np.column_stack(references))

    def exact(self, b_i: int, b_j: int, k: int) -> complex:
        ph = self.prop.phases(k * self.tau)
        return complex(np.sum(self.coeffs[:, b_i].conj() * ph * self.coeffs[:, b_j]))

    def element(self, b_i: int, b_j: int, k: int) -> complex:
        return self.exact(b_i, b_j, k)


class RoundedBackend(ExactBackend):
    def __init__(self, prop, references, tau, precision: int):
        super().__init__(prop, references, tau)
        self.precision = precision

    def element(self, b_i: int, b_j: int, k: int) -> complex:
        return round_element(self.exact(b_i, b_j, k), self.precision)


class ShotBackend:
    """Sampled elements of the Trotterized propagator ``U_trotter(tau)**k``.

    Evolved references are cached per power of ``U_trotter(tau)`` so each new
    Krylov block costs ``B`` Trotter sweeps of duration ``tau``.
    """

    def __init__(self, ham: PauliHamiltonian, references: list[np.ndarray], tau: float, model: Shots):
        self.model = model
        self.tau = tau
        self.refs = [np.ascontiguousarray(r, dtype=np.complex128) for r in references]
        plan = TrotterPlan(ham)
        self._sequence = plan.sequence(tau, model.trotter_dt)
        self._evolved: list[list[np.ndarray]] = [[r.copy()] for r in self.refs]

    def _state(self, b: int, k: int) -> np.ndarray:
        cache = self._evolved[b]
        while len(cache) <= k:
            nxt = cache[-1].copy()
            kernels.apply_rotation_sequence(nxt, *self._sequence)
            cache.append(nxt)
        return cache[k]

    def exact(self, b_i: int, b_j: int, k: int) -> complex:
        return complex(np.vdot(self.refs[b_i], self._state(b_j, k)))

    def element(self, b_i: int, b_j: int, k: int) -> complex:
        try:
            return sample_value(self.model, self.exact(b_i, b_j, k), (b_i, b_j, k))
        except ValueError as exc:
            raise ElementError(str(exc), b_i, b_j, k) from exc


def make_backend(model: MeasurementModel, ham_norm: PauliHamiltonian, references, tau: float, prop=None):
    """Element backend for ``model``; ``ham_norm`` must be the normalized Hamiltonian."""
    if isinstance(model, Shots):
        return ShotBackend(ham_norm, references, tau, model)
    prop = prop if prop is not None else ExactPropagator(ham_norm)
    if isinstance(model, Rounded):
        return RoundedBackend(prop, references, tau, model.precision)
    return ExactBackend(prop, references, tau)
