from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qbksp.errors import ElementError
from qbksp.expectation import ExactBackend, ShotBackend, Shots
from qbksp.krylov import (
    CountingBackend,
    ElementCache,
    QbkspConfig,
    SpectrumEstimate,
    assemble,
    cluster_and_track,
    cluster_levels,
    evaluate_block,
    extract_energies,
    references_are_real,
    run_qbksp,
)
from qbksp.pauli import NormalizationRecord, build_heisenberg, count_matrix_elements, normalize
from qbksp.references import build_block
from qbksp.statevector import ExactPropagator

from conftest import expm_hermitian, random_state


def _system(n, B, seed, real):
    ham, rec = normalize(build_heisenberg(n))
    rng = np.random.default_rng(seed)
    refs = [random_state(rng, 1 << n, real=real) for _ in range(B)]
    return ham, rec, refs


def _brute_force(ham, refs, tau, K):
    # explicit Krylov vectors U^l |ref_b>, l-major ordering
    u = expm_hermitian(ham.to_dense(), tau)
    cols, cur = [], [r.copy() for r in refs]
    for _ in range(K + 1):
        cols.extend(cur)
        cur = [u @ c for c in cur]
    v = np.column_stack(cols)
    return v.conj().T @ u @ v, v.conj().T @ v


def _cache(config, backend, K):
    cache = ElementCache(config.B, config.tau)
    for m in range(K + 2):
        cache.blocks[m] = evaluate_block(m, config, backend)
    return cache


@pytest.mark.parametrize("n", [2, 4, 6])
@pytest.mark.parametrize("B", [1, 2, 3])
@pytest.mark.parametrize("real", [True, False])
def test_assemble_matches_brute_force(n, B, real):
    ham, _, refs = _system(n, B, seed=10 * n + B, real=real)
    tau, K = 0.9, 6
    config = QbkspConfig(refs, tau, K, real_refs=references_are_real(refs, ham))
    mats = assemble(_cache(config, ExactBackend(ExactPropagator(ham), refs, tau), K), K)
    T, S = _brute_force(ham, refs, tau, K)
    np.testing.assert_allclose(mats.S, S, atol=1e-10)
    np.testing.assert_allclose(mats.T, T, atol=1e-10)


@given(B=st.integers(1, 3), K=st.integers(0, 5), seed=st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_block_toeplitz_and_hermitian(B, K, seed):
    ham, _, refs = _system(3, B, seed, real=False)
    config = QbkspConfig(refs, 2.0, K)
    mats = assemble(_cache(config, ExactBackend(ExactPropagator(ham), refs, 2.0), K), K)
    for M in (mats.S, mats.T):
        for r in range(K):
            for c in range(K):
                np.testing.assert_array_equal(M[r * B:(r + 1) * B, c * B:(c + 1) * B],
                                              M[(r + 1) * B:(r + 2) * B, (c + 1) * B:(c + 2) * B])
    np.testing.assert_allclose(mats.S, mats.S.conj().T, atol=1e-14)
    np.testing.assert_array_equal(np.diag(mats.S), 1.0)
    assert np.all(np.abs(mats.T) <= 1 + 1e-12)


def test_block_examples():
    ham, _, refs = _system(3, 3, 1, real=True)
    config = QbkspConfig(refs, 1.0, 5, real_refs=True)
    counter = CountingBackend(ExactBackend(ExactPropagator(ham), refs, 1.0))
    evaluate_block(0, config, counter)
    assert counter.n_calls == 3
    one = QbkspConfig(refs[:1], 1.0, 5)
    c1 = CountingBackend(ExactBackend(ExactPropagator(ham), refs[:1], 1.0))
    np.testing.assert_array_equal(evaluate_block(0, one, c1), [[1.0]])
    assert c1.n_calls == 0
    two = QbkspConfig(refs[:2], 1.0, 5, real_refs=True)
    be = ExactBackend(ExactPropagator(ham), refs[:2], 1.0)
    c2 = CountingBackend(be)
    blk = evaluate_block(5, two, c2)
    assert c2.n_calls == 3
    full = np.array([[be.element(i, j, 5) for j in range(2)] for i in range(2)])
    np.testing.assert_allclose(blk, full, atol=1e-12)


@pytest.mark.parametrize("B", [1, 2, 3, 4])
@pytest.mark.parametrize("real, orth", [(False, False), (True, False), (False, True), (True, True)])
def test_call_accounting(B, real, orth):
    n = 3
    ham, _ = normalize(build_heisenberg(n))
    prop = ExactPropagator(ham)
    if orth:
        refs = [prop.eigenvectors[:, i].astype(complex) for i in range(B)]
    else:
        refs = [random_state(np.random.default_rng(b), 1 << n, real=True) for b in range(B)]
    config = QbkspConfig(refs, 1.0, 10, real_refs=real, orthogonal_refs=orth, stop_when_converged=False)
    counter = CountingBackend(ExactBackend(prop, refs, 1.0))
    hist = run_qbksp(config, build_heisenberg(n), backend=counter, propagator=prop)
    assert len(set(counter.calls)) == counter.n_calls
    for est in hist:
        assert est.n_elements == count_matrix_elements(B, est.iteration, real, orth)
    if B == 1:
        assert counter.n_calls == 11


def test_element_error_has_coordinates():
    class Failing:
        def element(self, i, j, k):
            if k == 2:
                raise RuntimeError("device offline")
            return 0.5

    ham, _, refs = _system(2, 2, 0, real=True)
    config = QbkspConfig(refs, 1.0, 3)
    with pytest.raises(ElementError) as exc:
        evaluate_block(2, config, Failing())
    assert (exc.value.b_i, exc.value.b_j, exc.value.k) == (0, 0, 2)


def test_extract_energies_examples():
    rec = NormalizationRecord(scale=2.0, shift=0.0)
    e, mod, spur = extract_energies([np.exp(-1j * 0.6 * 3)], 3.0, rec)
    assert e[0] == pytest.approx(1.2)
    e, _, _ = extract_energies([1.0], 3.0, NormalizationRecord(1.0, -7.5))
    assert e[0] == -7.5
    e, mod, spur = extract_energies([2.0 + 0j, 0.9j, 0.1], 1.0, NormalizationRecord(1.0, 0.0))
    assert len(e) == 1 and len(spur) == 2
    assert e[0] == pytest.approx(-math.pi / 2)
    # arg = pi maps to -pi, i.e. the upper end of the energy window
    e, _, _ = extract_energies([-1.0 + 0j], 1.0, NormalizationRecord(1.0, 0.0))
    assert e[0] == pytest.approx(math.pi)


@given(st.lists(st.floats(-10, 10), max_size=30), st.floats(1e-4, 0.5))
def test_cluster_levels_partition(energies, tol):
    levels = cluster_levels(energies, tol)
    assert sum(m for _, m in levels) == len(energies)
    means = [e for e, _ in levels]
    assert means == sorted(means)
    assert all(b - a > tol for a, b in zip(means, means[1:]))


def _estimate(k, energies):
    e = np.array(energies, dtype=float)
    return SpectrumEstimate(k, 0, e, np.ones_like(e), e.astype(complex), np.zeros(0, complex))


def test_constant_value_converges_at_second_iteration():
    cfg = QbkspConfig([np.array([1, 0], dtype=complex)], 1.0, 5, n_target=1)
    hist = [cluster_and_track([], _estimate(0, [-1.0, 0.5]), cfg)]
    assert hist[0].frozen == () and hist[0].converged == (False,)
    hist.append(cluster_and_track(hist, _estimate(1, [-1.0, 0.5 + 1e-3]), cfg))
    assert [f.energy for f in hist[1].frozen] == [-1.0]
    assert hist[1].frozen[0].iteration == 1
    assert hist[1].converged == (True,) and hist[1].done


def test_frozen_values_are_not_revised():
    cfg = QbkspConfig([np.array([1, 0], dtype=complex)], 1.0, 5, n_target=3)
    hist = [cluster_and_track([], _estimate(0, [-1.0]), cfg)]
    hist.append(cluster_and_track(hist, _estimate(1, [-1.00005]), cfg))
    hist.append(cluster_and_track(hist, _estimate(2, [-1.0009, -1.0001]), cfg))
    assert [(f.energy, f.multiplicity) for f in hist[-1].frozen] == [(-1.00005, 1)]
    assert hist[-1].levels[0][1] == 2


def test_nearest_match_tie_goes_low():
    cfg = QbkspConfig([np.array([1, 0], dtype=complex)], 1.0, 5, per_state_tolerance=0.1,
                      degeneracy_cluster_tol=1e-3)
    hist = [cluster_and_track([], _estimate(0, [0.0, 0.2]), cfg)]
    est = cluster_and_track(hist, _estimate(1, [0.1]), cfg)
    assert [f.energy for f in est.frozen] == [0.1]


@pytest.mark.parametrize("B", [1, 2, 3])
def test_exact_reference_shortcut(B):
    ham = build_heisenberg(4, (-1.0, -1.0, -1.0))  # non-degenerate low levels
    hn, rec = normalize(ham)
    prop = ExactPropagator(hn, rec)
    refs = [prop.eigenvectors[:, i].astype(complex) for i in range(B)]
    config = QbkspConfig(refs, 3.0, 0)
    est = run_qbksp(config, ham, propagator=prop, normalization=(hn, rec))[0]
    got = rec.normalize(est.energies)
    np.testing.assert_allclose(np.sort(got), prop.eigenvalues[:B], atol=1e-10)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
@pytest.mark.parametrize("B", [1, 2])
def test_frozen_energies_match_oracle(n, B):
    # a freeze tolerance below the 1e-6 bar, so that convergence certifies the accuracy
    ham = build_heisenberg(n)
    hn, rec = normalize(ham)
    prop = ExactPropagator(hn, rec)
    oracle = rec.denormalize(prop.eigenvalues)
    for seed in range(3):
        blk = build_block([0.5] * B, prop.eigenvalues, prop.eigenvectors, np.random.default_rng(seed), real=True)
        config = QbkspConfig(blk.states, 3.0, 50, per_state_tolerance=1e-8)
        est = run_qbksp(config, ham, propagator=prop, normalization=(hn, rec))[-1]
        assert est.frozen
        for f in est.frozen:
            assert np.min(np.abs(oracle - f.energy)) <= 1e-6


@pytest.mark.xfail(strict=True, reason="a per-iteration change test cannot bound the error by the same tolerance; "
                                       "Ritz values stall while the retained dimension is flat")
@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**16), B=st.integers(1, 2))
def test_frozen_within_per_state_tolerance(seed, B):
    ham = build_heisenberg(6)
    hn, rec = normalize(ham)
    prop = _PROP6
    blk = build_block([0.5] * B, prop.eigenvalues, prop.eigenvectors, np.random.default_rng(seed), real=True)
    config = QbkspConfig(blk.states, 3.0, 50, stop_when_converged=False)
    oracle = rec.denormalize(prop.eigenvalues)
    est = run_qbksp(config, ham, propagator=prop, normalization=(hn, rec))[-1]
    for f in est.frozen:
        assert np.min(np.abs(oracle - f.energy)) <= config.per_state_tolerance


_PROP6 = ExactPropagator(*normalize(build_heisenberg(6)))


def test_shot_order_independence():
    ham, rec, refs = _system(3, 2, 5, real=True)
    model = Shots(1000, 0.3, seed=11)
    keys = [(i, j, k) for k in range(4) for i in range(2) for j in range(2)]
    a = {key: ShotBackend(ham, refs, 1.0, model).element(*key) for key in keys}
    be = ShotBackend(ham, refs, 1.0, model)
    b = {key: be.element(*key) for key in reversed(keys)}
    assert a == b


def test_run_is_deterministic_and_records_failures():
    ham = build_heisenberg(3)
    refs = [random_state(np.random.default_rng(0), 8, real=True)]
    config = QbkspConfig(refs, 1.0, 4, model=Shots(200, 0.2, seed=3), sigma=0.1, stop_when_converged=False)
    h1, h2 = run_qbksp(config, ham), run_qbksp(config, ham)
    assert len(h1) == 5
    for a, b in zip(h1, h2):
        np.testing.assert_array_equal(a.energies, b.energies)
    big = QbkspConfig(refs, 1.0, 2, sigma=10.0, stop_when_converged=False)
    hist = run_qbksp(big, ham)
    assert all(e.error and "AllTruncatedError" in e.error for e in hist)


def test_config_validation():
    psi = np.array([1, 0], dtype=complex)
    with pytest.raises(ValueError):
        QbkspConfig([], 1.0, 2)
    with pytest.raises(ValueError):
        QbkspConfig([psi], 4.0, 2)
    with pytest.raises(ValueError):
        QbkspConfig([psi * 2], 1.0, 2)
    with pytest.raises(ValueError):
        QbkspConfig([psi, np.ones(4) / 2], 1.0, 2)
