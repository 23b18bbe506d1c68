import mpmath
import numpy as np
import pytest

from isingcat.bath import (BathSpec, CouplingSpec, EmptyBlock, coupling_channels,
                           gamma_block, gamma_entries, gamma_entries_mp, lamb_shift,
                           noise_power, noise_power_mp, population_rates, upsilon_matrix)
from isingcat.chain import ChainSpec, build_eigenstructure, total_sx
from isingcat.partition import build_partition, sx_matrix


def test_noise_power_examples():
    assert noise_power(BathSpec(0.0), -0.2) == 0.0
    b = BathSpec(0.0, eta=0.1, cutoff=10.0)
    assert noise_power(b, 1.0) == pytest.approx(2 * np.pi * 0.1 * np.exp(-0.1), rel=1e-12)
    # rounded reference value
    assert noise_power(b, 1.0) == pytest.approx(0.56846, abs=1e-4)


@pytest.mark.parametrize("T", [0.01, 0.3, 2.0])
def test_kms(T):
    b = BathSpec(T, eta=0.7, cutoff=5.0)
    nu = np.linspace(0.01, 10, 200) * T
    ratio = noise_power(b, -nu) / noise_power(b, nu)
    assert np.allclose(ratio, np.exp(-nu / T), rtol=1e-12, atol=0)


def test_noise_power_zero_frequency_limit():
    b = BathSpec(0.3, eta=0.5)
    assert noise_power(b, 0.0) == pytest.approx(noise_power(b, 1e-7), rel=1e-6)


def test_mp_noise_power_matches():
    b = BathSpec(0.2, eta=0.4, cutoff=3.0)
    for nu in (-1.3, -0.01, 0.0, 0.5, 2.0):
        assert float(noise_power_mp(b, nu)) == pytest.approx(noise_power(b, nu), rel=1e-13)


def test_uniform_rates_follow_sx(fig2_es):
    b = BathSpec(0.3)
    rt = gamma_block(fig2_es, CouplingSpec(0.1), b)
    G = population_rates(rt, 16)
    S = fig2_es.vectors.T @ total_sx(4) @ fig2_es.vectors
    off = ~np.eye(16, dtype=bool)
    E = fig2_es.energies
    W = noise_power(b, E[None, :] - E[:, None])
    # rate l -> k equals e^2 |S_kl|^2 W(E_l - E_k)
    R = 0.01 * S ** 2 * W
    assert np.allclose(G[off], R[off], rtol=1e-12, atol=1e-14 * R.max())
    assert np.abs(G[off][np.abs(S[off]) < 1e-14]).max() < 1e-14 * R.max()


def test_zero_temperature_upward_rates_vanish(fig2_es):
    rt = gamma_block(fig2_es, CouplingSpec(0.1, eps_local=0.01), BathSpec(0.0))
    G = population_rates(rt, 16)
    E = fig2_es.energies
    up = E[:, None] > E[None, :] + 1e-9      # k above l
    assert np.all(G[up] == 0)


def test_cat_entry_against_loop_sum(cat_setup):
    es, part, blocks = cat_setup
    i, j = part.index("c-"), part.index("a")
    pr = blocks.pairs[1]
    assert (i, j) in pr
    r = pr.index((i, j))
    gamma = 1j * blocks.g0[1][r, r]           # G0 = -i gamma
    assert gamma.real < 0
    chans = coupling_channels(part, blocks.coupling, blocks.bath)
    with mpmath.workdps(30):
        ref = gamma_entries_mp(chans, part.energies, list(pr), blocks.omega)
    ref = np.array(ref.tolist(), dtype=complex)
    assert np.abs(-1j * ref - blocks.g0[1]).max() < 1e-12 * np.abs(ref).max()


def test_loop_sum_matches_vectorised_p0():
    spec = ChainSpec(2, 1.0, (0.2, 0.1))
    es = build_eigenstructure(spec)
    c = CouplingSpec(0.1, eps_local=0.02)
    b = BathSpec(0.4)
    rt = gamma_block(es, c, b)
    with mpmath.workdps(30):
        ref = gamma_entries_mp(coupling_channels(es, c, b), es.energies, list(rt.pairs))
    ref = np.array(ref.tolist(), dtype=complex)
    assert np.abs(ref - rt.entries).max() < 1e-13 * np.abs(ref).max()


@pytest.mark.parametrize("eps", [0.0, 0.02])
def test_upsilon_properties(fig2_es, eps):
    T = 0.3
    rt = gamma_block(fig2_es, CouplingSpec(0.1, eps_local=eps), BathSpec(T))
    U = upsilon_matrix(rt, fig2_es.energies, T)
    m = np.abs(U).max()
    assert np.abs(U - U.T).max() < 1e-10 * m
    assert np.abs(U.sum(axis=0)).max() < 1e-10 * m
    off = ~np.eye(len(U), dtype=bool)
    assert U[off].min() >= -1e-14 * m


def test_low_temperature_asymptotics(fig2_es):
    E = fig2_es.energies
    c = CouplingSpec(0.1)
    cold = population_rates(gamma_block(fig2_es, c, BathSpec(0.0)), 16)
    checked = 0
    for k in range(16):
        for l in range(16):
            gap = E[k] - E[l]
            if gap < 0.1 or cold[l, k] == 0:
                continue
            T = gap / 20
            G = population_rates(gamma_block(fig2_es, c, BathSpec(T)), 16)
            assert G[k, l] == pytest.approx(cold[l, k] * np.exp(-gap / T), rel=0.05)
            checked += 1
    assert checked > 5


def test_hermiticity_transport(cat_setup):
    blocks = cat_setup[2]
    gp, gm = blocks.g0_tilde[1], blocks.g0_tilde[-1]
    pp, pm = blocks.pairs[1], blocks.pairs[-1]
    idx = {pr: i for i, pr in enumerate(pm)}
    perm = [idx[(l, k)] for k, l in pp]
    # gamma^(-p)_{lk,l'k'} = conj gamma^(p)_{kl,k'l'}; G0 = -i gamma
    assert np.allclose(1j * gm[np.ix_(perm, perm)], np.conj(1j * gp), atol=1e-14)


@pytest.mark.parametrize("n_half", [2, 3])
def test_downward_path_exists(n_half):
    h = (0.2, 0.1) if n_half == 2 else (0.2, 0.1, 0.05)
    spec = ChainSpec(n_half, 1.0, h)
    es = build_eigenstructure(spec)
    c = CouplingSpec(0.1, eps_local=0.01)
    G = population_rates(gamma_block(es, c, BathSpec(0.0)), spec.dim)
    E = es.energies
    a_idx = int(np.argmax(np.abs(es.vectors.T @ es.named["a"])))
    for l in range(spec.dim):
        if E[l] <= E[a_idx] + 1e-9:
            continue
        down = [k for k in range(spec.dim) if E[k] < E[l] - 1e-9 and G[k, l] > 0]
        assert down, f"state {l} at E={E[l]} has no downward path"
    down_a = [k for k in range(spec.dim) if E[k] < E[a_idx] - 1e-9 and G[k, a_idx] > 0]
    assert not down_a


def test_empty_block(fig2_es):
    with pytest.raises(EmptyBlock):
        gamma_block(fig2_es, CouplingSpec(0.1), BathSpec(0.3), p=1, omega=0.123)


def test_lamb_shift_sign():
    b = BathSpec(0.0, eta=0.1, cutoff=2.0, include_shifts=True)
    # positive y lies above the spectral weight only partially; for y far below
    # all weight the shift is negative: (1/2pi) int W/(y - nu) < 0
    assert lamb_shift(b, -5.0) < 0
