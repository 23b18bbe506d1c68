import itertools

import numpy as np
import pytest

from isingcat.chain import (ChainSpec, ChainSpecError, DegeneracyAmbiguity, apply_pi,
                            build_eigenstructure, configuration_energies, energy_of,
                            from_string, group_levels, one_interface_states, pi_matrix,
                            to_string)


def test_energy_examples(fig2):
    assert energy_of(fig2, from_string("++++")) == pytest.approx(-3.0, abs=1e-12)
    assert energy_of(fig2, from_string("++--")) == pytest.approx(-1.6, abs=1e-12)
    assert energy_of(fig2, from_string("----")) == pytest.approx(-3.0, abs=1e-12)


def test_vectorised_energies_match(fig2):
    e = configuration_energies(fig2)
    assert np.allclose(e, [energy_of(fig2, c) for c in range(fig2.dim)], atol=1e-14)


def test_pi_examples():
    assert to_string(apply_pi(from_string("+++-"), 4), 4) == "+---"
    assert to_string(apply_pi(from_string("++--"), 4), 4) == "++--"


def test_pi_involution():
    rng = np.random.default_rng(0)
    for c in rng.integers(0, 1 << 10, size=1000):
        assert apply_pi(apply_pi(int(c), 10), 10) == c


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_pi_commutes_with_h(n):
    h = tuple(0.4 / n * (1 - 0.1 * i) for i in range(n))
    spec = ChainSpec(n, 1.0, h)
    e = configuration_energies(spec)
    perm = [apply_pi(c, spec.n_sites) for c in range(spec.dim)]
    assert np.allclose(e, e[perm], atol=1e-12)


def test_spec_validation():
    with pytest.raises(ChainSpecError, match="sum"):
        ChainSpec(2, 1.0, (0.3, 0.3))
    with pytest.raises(ChainSpecError):
        ChainSpec(1, 1.0, (0.1,))
    with pytest.raises(ChainSpecError):
        ChainSpec(2, -1.0, (0.1, 0.1))


def test_level_structure(fig2_es):
    levels = fig2_es.levels
    assert len(levels) == 10
    degs = sorted(len(lv.configs) for lv in levels)
    assert degs == [1] * 4 + [2] * 6
    assert levels[0].energy == pytest.approx(-3.0)
    assert len(levels[0].configs) == 2
    assert all(a.energy < b.energy for a, b in zip(levels, levels[1:]))


def test_one_interface_ordering(fig2_es):
    es = fig2_es
    E = lambda name: float(es.named[name] @ np.diag(es.config_energies) @ es.named[name])
    assert E("up") < E("a") < E("c+") < E("d+") < E("b")
    assert E("c+") == pytest.approx(-1.0 - 2 * 0.2)


def test_n3_degenerate_quartet():
    spec = ChainSpec(3, 1.0, (0.2, 0.1, 0.05))
    for s in ("-+----", "-+++--", "++++-+", "++---+"):
        assert energy_of(spec, from_string(s)) == pytest.approx(-1.0 - 2 * 0.1, abs=1e-12)


def test_one_interface_states(fig2):
    states = one_interface_states(fig2)
    assert len(states) == 6
    for c, e in states:
        assert e == pytest.approx(energy_of(fig2, c), abs=1e-12)
    es = build_eigenstructure(fig2)
    for lv in es.levels[1:5]:
        m = {to_string(c, 4) for c in lv.configs}
        assert len(lv.configs) == (1 if m & {"++--", "--++"} else 2)


def test_adapted_basis(fig2_es):
    es = fig2_es
    pim = pi_matrix(4)
    for lv in es.levels:
        V = lv.vectors
        assert np.allclose(V.T @ V, np.eye(V.shape[1]), atol=1e-12)
        for j, par in enumerate(lv.parities):
            assert np.array_equal(pim @ V[:, j], par * V[:, j])
        P = np.zeros((es.spec.dim,) * 2)
        for c in lv.configs:
            P[c, c] = 1.0
        assert np.abs(V @ V.T - P).max() < 1e-12
    # one even, one odd for each doubly degenerate one-interface level
    for lv in es.levels[1:5]:
        if len(lv.configs) == 2:
            assert sorted(lv.parities) == [-1, 1]


def test_scs_parities(fig2_es):
    pim = pi_matrix(4)
    n = fig2_es.named
    assert np.allclose(pim @ n["scs-"], -n["scs-"])
    assert np.allclose(pim @ n["scs+"], n["scs+"])


def test_degeneracy_ambiguity():
    with pytest.raises(DegeneracyAmbiguity):
        group_levels(np.array([0.0, 1e-10, 1.0]), tol=1e-9)
