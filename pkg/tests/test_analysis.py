import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isingcat.analysis import (InvalidState, cat_mixture, cat_parameter, check_state,
                               entanglement_witness, fidelity_with, partial_trace,
                               state_metrics, trace_distance, validity,
                               von_neumann_entropy)


def _random_state(rng, n_sites, rank=None):
    dim = 1 << n_sites
    rank = rank or dim
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def test_cat_parameter_extremes():
    assert cat_parameter(cat_mixture(1.0, 4)) == pytest.approx((1.0, 1.0))
    assert cat_parameter(cat_mixture(0.0, 4)) == pytest.approx((0.0, 1.0))
    assert cat_parameter(cat_mixture(0.5, 4)) == pytest.approx((0.5, 1.0))


def test_witness_example():
    s_sub, s_tot, ent = entanglement_witness(cat_mixture(0.9, 4), [1, 2])
    assert s_sub == pytest.approx(np.log(2), abs=1e-12)
    assert s_tot == pytest.approx(-(0.9 * np.log(0.9) + 0.1 * np.log(0.1)), abs=1e-12)
    assert ent


def test_witness_silent_on_equal_mixture():
    assert not entanglement_witness(cat_mixture(0.5, 4), [1, 2])[2]


def test_partial_trace_of_product():
    rng = np.random.default_rng(1)
    a, b = _random_state(rng, 1), _random_state(rng, 2)
    rho = np.kron(b, a)         # site 1 is the least significant factor
    assert np.allclose(partial_trace(rho, [1]), a, atol=1e-14)
    assert np.allclose(partial_trace(rho, [2, 3]), b, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), keep=st.sets(st.integers(1, 4), min_size=1, max_size=3))
def test_partial_trace_properties(seed, keep):
    rho = _random_state(np.random.default_rng(seed), 4)
    r = partial_trace(rho, keep)
    assert np.trace(r) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(r, r.conj().T, atol=1e-13)
    assert np.linalg.eigvalsh(r).min() > -1e-12
    # tracing in two steps gives the same result
    if len(keep) > 1:
        k = sorted(keep)
        r2 = partial_trace(r, range(2, len(k) + 1))
        assert np.allclose(r2, partial_trace(rho, k[1:]), atol=1e-13)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), cut=st.integers(1, 3))
def test_pure_state_entropy_symmetric(seed, cut):
    rho = _random_state(np.random.default_rng(seed), 4, rank=1)
    a = entanglement_witness(rho, range(1, cut + 1))
    b = entanglement_witness(rho, range(cut + 1, 5))
    assert a[0] == pytest.approx(b[0], abs=1e-9)
    assert a[1] == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_cat_parameter_ignores_off_doublet_changes(seed):
    rng = np.random.default_rng(seed)
    rho = _random_state(rng, 4)
    p0 = cat_parameter(rho)[0]
    # unitary mixing inside the complement of the doublet
    k = rng.normal(size=(14, 14)) + 1j * rng.normal(size=(14, 14))
    q, _ = np.linalg.qr(k)
    u = np.eye(16, dtype=complex)
    u[1:15, 1:15] = q
    assert cat_parameter(u @ rho @ u.conj().T)[0] == pytest.approx(p0, abs=1e-12)


def test_fidelity_and_distance():
    v = np.zeros(16)
    v[0] = v[15] = 1 / np.sqrt(2)
    rho = cat_mixture(0.0, 4)
    assert fidelity_with(rho, v) == pytest.approx(1.0)
    assert trace_distance(rho, cat_mixture(1.0, 4)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fidelity_with(rho, np.ones(4))


def test_entropy_bounds():
    assert von_neumann_entropy(np.eye(16) / 16) == pytest.approx(np.log(16))
    assert von_neumann_entropy(cat_mixture(0.0, 4)) == pytest.approx(0.0, abs=1e-12)


def test_validity_and_errors():
    bad = np.diag([1.2, -0.2, 0, 0])
    assert not validity(bad).ok
    with pytest.raises(InvalidState):
        check_state(bad)
    with pytest.raises(ValueError):
        partial_trace(np.eye(6) / 6, [1])
    with pytest.raises(ValueError):
        entanglement_witness(np.eye(16) / 16, [1, 2, 3, 4])


def test_state_metrics_keys(fig2_es):
    m = state_metrics(cat_mixture(0.9, 4), fig2_es.named)
    assert m["entangled_by_witness"]
    assert m["fidelity"]["scs-"] == pytest.approx(0.9)
