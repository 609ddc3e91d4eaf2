from __future__ import annotations

import logging

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbksp.pauli import PauliHamiltonian, build_heisenberg, normalize
from qbksp.statevector import (
    ExactPropagator,
    TrotterPlan,
    apply_pauli_exponential,
    as_statevector,
    basis_state,
    evolve_exact,
    evolve_trotter2,
    load_statevector,
    save_statevector,
)

from conftest import expm_hermitian, heisenberg_dense, kron_pauli, random_state


@pytest.mark.parametrize("n", [2, 3, 4])
def test_exact_propagator_matches_expm(n, rng):
    ham = build_heisenberg(n)
    prop = ExactPropagator(ham)
    psi = random_state(rng, 1 << n)
    for t in (0.0, 0.37, 3.0):
        np.testing.assert_allclose(evolve_exact(prop, t, psi), expm_hermitian(heisenberg_dense(n), t) @ psi, atol=1e-11)


@given(t1=st.floats(-5, 5), t2=st.floats(-5, 5))
@settings(max_examples=30, deadline=None)
def test_semigroup_and_unitarity(t1, t2):
    ham, _ = normalize(build_heisenberg(4))
    prop = ExactPropagator(ham)
    psi = random_state(np.random.default_rng(1), 16)
    a = prop.evolve(t1, prop.evolve(t2, psi))
    np.testing.assert_allclose(a, prop.evolve(t1 + t2, psi), atol=1e-12)
    assert np.linalg.norm(a) == pytest.approx(1.0, abs=1e-12)


def test_pauli_exponential_leaves_input():
    psi = basis_state(2, 0)
    out = apply_pauli_exponential("YX", 0.4, psi)
    np.testing.assert_allclose(out, expm_hermitian(kron_pauli("YX"), 0.4) @ basis_state(2, 0), atol=1e-14)
    np.testing.assert_array_equal(psi, basis_state(2, 0))
    with pytest.raises(ValueError):
        apply_pauli_exponential("XXX", 0.1, psi)


def test_step_sizes():
    assert TrotterPlan.step_sizes(0.0, 0.1) == []
    steps = TrotterPlan.step_sizes(1.0, 0.3)
    assert len(steps) == 4 and sum(steps) == pytest.approx(1.0)
    assert steps[-1] == pytest.approx(0.1)
    assert len(TrotterPlan.step_sizes(0.9, 0.3)) == 3
    with pytest.raises(ValueError):
        TrotterPlan.step_sizes(1.0, 0.0)


def _strang_reference(ham, t, dt, psi):
    # unmerged Strang splitting built from dense single-term exponentials
    out = psi.copy()
    for h in TrotterPlan.step_sizes(t, dt):
        for c, s in list(ham.terms) + list(ham.terms)[::-1]:
            out = expm_hermitian(kron_pauli(s), c * h / 2) @ out
    return out


def test_trotter_matches_dense_strang(rng):
    ham = PauliHamiltonian.from_terms([(0.3, "XZI"), (-0.7, "IYY"), (0.2, "ZIX"), (0.5, "ZZZ")])
    psi = random_state(rng, 8)
    np.testing.assert_allclose(evolve_trotter2(ham, 1.3, 0.4, psi), _strang_reference(ham, 1.3, 0.4, psi), atol=1e-12)


def test_trotter_exact_for_commuting_terms(rng):
    ham = PauliHamiltonian.from_terms([(0.4, "ZZI"), (-1.1, "IZZ"), (0.6, "ZIZ")])
    psi = random_state(rng, 8)
    want = expm_hermitian(ham.to_dense(), 2.5) @ psi
    np.testing.assert_allclose(evolve_trotter2(ham, 2.5, 0.7, psi), want, atol=1e-12)


def test_trotter_second_order():
    ham, _ = normalize(build_heisenberg(4))
    psi = random_state(np.random.default_rng(3), 16)
    exact = ExactPropagator(ham).evolve(1.0, psi)
    errs = [np.linalg.norm(evolve_trotter2(ham, 1.0, dt, psi) - exact) for dt in (0.2, 0.1, 0.05)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates >= 1.8)


def test_statevector_io(tmp_path, rng, caplog):
    psi = random_state(rng, 8)
    save_statevector(tmp_path / "s.txt", psi)
    np.testing.assert_allclose(load_statevector(tmp_path / "s.txt"), psi, atol=1e-15)
    (tmp_path / "u.txt").write_text("2 0\n0 0\n")
    with caplog.at_level(logging.WARNING):
        got = load_statevector(tmp_path / "u.txt")
    np.testing.assert_allclose(got, [1, 0])
    assert "renormalized" in caplog.text
    (tmp_path / "bad.txt").write_text("1 0\n0 0\n0 0\n")
    with pytest.raises(ValueError):
        load_statevector(tmp_path / "bad.txt")


def test_as_statevector_validates():
    with pytest.raises(ValueError):
        as_statevector([1, 0, 0])
    with pytest.raises(ValueError):
        as_statevector([1, 1])
