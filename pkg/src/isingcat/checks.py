"""Numerical witnesses of the structural results: no thermal cat for local
Hamiltonians, and no decoherence-free subspace except the special DFS state.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .bath import BathSpec, CouplingSpec
from .chain import ChainSpec, build_eigenstructure, configuration_energies, pauli, spins, total_sx
from .oracle import redfield_superoperator

NULL_RTOL = 1e-10
DEFAULT_SEED = 20240607


class SplitInvalid(ValueError):
    """The H1 + H' split violates the locality precondition."""


# ---------------------------------------------------------------------------
# local Hamiltonians

@dataclass(frozen=True)
class LocalTerm:
    sites: tuple            # contiguous, 1-based
    paulis: dict            # {"xz": coeff, ...}, one letter per site

    def __post_init__(self):
        s = self.sites
        if list(s) != list(range(s[0], s[0] + len(s))):
            raise ValueError(f"term sites {s} are not contiguous")
        for k in self.paulis:
            if len(k) != len(s):
                raise ValueError(f"pauli string {k!r} does not match sites {s}")

    def matrix(self, n_sites: int) -> np.ndarray:
        dim = 1 << n_sites
        out = np.zeros((dim, dim), complex)
        for word, c in self.paulis.items():
            m = np.eye(dim, dtype=complex)
            for site, ax in zip(self.sites, word):
                if ax != "i":
                    m = m @ pauli(site, ax, n_sites)
            out += c * m
        return out


@dataclass(frozen=True)
class LocalHamiltonian:
    n_sites: int
    h1: tuple               # terms that may touch site 1
    h_rest: tuple           # terms that must not touch site 1
    seed: int | None = None

    def validate(self):
        if any(1 in t.sites for t in self.h_rest):
            raise SplitInvalid("H' contains an observable of site 1")
        touched = {s for t in self.h1 for s in t.sites}
        if not set(range(2, self.n_sites + 1)) - touched:
            raise SplitInvalid("H1 acts on every site, no site n != 1 is left untouched")

    def matrices(self):
        z = np.zeros((1 << self.n_sites,) * 2, complex)
        m1 = sum((t.matrix(self.n_sites) for t in self.h1), z)
        m2 = sum((t.matrix(self.n_sites) for t in self.h_rest), z.copy())
        return m1, m2


def split_terms(n_sites: int, terms, seed=None) -> LocalHamiltonian:
    """Put every term that touches site 1 into H1, the rest into H'."""
    h1 = tuple(t for t in terms if 1 in t.sites)
    rest = tuple(t for t in terms if 1 not in t.sites)
    lh = LocalHamiltonian(n_sites, h1, rest, seed)
    lh.validate()
    return lh


def random_local_hamiltonian(n_sites: int, rng: np.random.Generator,
                             seed=None) -> LocalHamiltonian:
    """Nearest-neighbour 2-local terms plus fields, coefficients uniform in [-1, 1]."""
    terms = []
    for n in range(1, n_sites + 1):
        terms.append(LocalTerm((n,), {a: rng.uniform(-1, 1) for a in "xyz"}))
    for n in range(1, n_sites):
        words = {a + b: rng.uniform(-1, 1) for a, b in itertools.product("xyz", repeat=2)}
        terms.append(LocalTerm((n, n + 1), words))
    return split_terms(n_sites, terms, seed)


def ising_local_hamiltonian(spec: ChainSpec) -> LocalHamiltonian:
    """The chain Hamiltonian written as local terms."""
    n2 = spec.n_sites
    terms = [LocalTerm((n, n + 1), {"zz": -spec.coupling_j}) for n in range(1, n2)]
    for n, h in enumerate(spec.fields_h, start=1):
        terms.append(LocalTerm((n,), {"z": -h}))
        terms.append(LocalTerm((n2 + 1 - n,), {"z": h}))
    return split_terms(n2, terms)


# ---------------------------------------------------------------------------
# no thermal cat

def _product_state(kets) -> np.ndarray:
    """Tensor product of single-site kets [amp(-), amp(+)], site 1 first.

    Site n is bit n-1, so the last site is the most significant factor.
    """
    out = np.array([1.0 + 0j])
    for k in kets:
        out = np.kron(k, out)
    return out


def _random_onb(rng, d=2):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, _ = np.linalg.qr(z)
    return q


def no_thermal_cat_property(lh: LocalHamiltonian, rng: np.random.Generator | None = None,
                            gap_tol: float = 1e-8) -> dict:
    """Check the energy identity and, for a unique ground state, that cat and
    Schmidt-decomposable states lie strictly above the ground energy."""
    lh.validate()
    n = lh.n_sites
    rng = rng if rng is not None else np.random.default_rng(lh.seed)
    m1, m2 = lh.matrices()
    H = m1 + m2
    dim = 1 << n
    up, down = np.zeros(dim), np.zeros(dim)
    up[-1], down[0] = 1.0, 1.0
    e_up = float(np.real(up @ H @ up))
    e_down = float(np.real(down @ H @ down))
    cross = {"h1": complex(down @ m1 @ up), "h_rest": complex(down @ m2 @ up)}
    ev = np.linalg.eigvalsh(H)
    e0, gap = float(ev[0]), float(ev[1] - ev[0])

    cats = {}
    for tag, sign in (("scs-", -1), ("scs+", 1)):
        v = (up + sign * down) / np.sqrt(2)
        cats[tag] = float(np.real(v @ H @ v))
    mean_doublet = 0.5 * (e_up + e_down)

    # Schmidt-decomposable state with s = 2 terms
    bases = [_random_onb(rng) for _ in range(n)]
    lam = rng.normal(size=2) + 1j * rng.normal(size=2)
    lam /= np.linalg.norm(lam)
    phis = [_product_state([b[:, r] for b in bases]) for r in range(2)]
    psi = lam[0] * phis[0] + lam[1] * phis[1]
    a_psi = float(np.real(psi.conj() @ H @ psi))
    a_sum = float(sum(abs(lam[r]) ** 2 * np.real(phis[r].conj() @ H @ phis[r]) for r in range(2)))

    unique = gap > gap_tol
    return {
        "seed": lh.seed,
        "ground_energy": e0,
        "gap": gap,
        "unique_ground_state": unique,
        "cross_terms": cross,
        "cat_energy": cats,
        "doublet_mean": mean_doublet,
        "identity_error": max(abs(c - mean_doublet) for c in cats.values()),
        "cat_above_ground": all(c > e0 for c in cats.values()) if unique else None,
        "schmidt_energy": a_psi,
        "schmidt_identity_error": abs(a_psi - a_sum),
        "schmidt_above_ground": (a_psi > e0) if unique else None,
    }


def no_cat_trials(n_trials: int = 100, n_sites: int = 4, seed: int = DEFAULT_SEED) -> dict:
    """Random local Hamiltonians with a unique ground state; degenerate draws
    are redrawn and counted."""
    rng = np.random.default_rng(seed)
    reports, redrawn = [], 0
    while len(reports) < n_trials:
        rep = no_thermal_cat_property(random_local_hamiltonian(n_sites, rng, seed), rng)
        if not rep["unique_ground_state"]:
            redrawn += 1
            continue
        reports.append(rep)
    strict = sum(r["cat_above_ground"] and r["schmidt_above_ground"] for r in reports)
    return {
        "seed": seed,
        "n_sites": n_sites,
        "trials": n_trials,
        "redrawn_degenerate": redrawn,
        "strict_inequality_count": int(strict),
        "min_margin": min(min(r["cat_energy"].values()) - r["ground_energy"] for r in reports),
        "max_cross_term": max(abs(c) for r in reports for c in r["cross_terms"].values()),
        "max_identity_error": max(r["identity_error"] for r in reports),
        "max_schmidt_identity_error": max(r["schmidt_identity_error"] for r in reports),
    }


# ---------------------------------------------------------------------------
# decoherence-free subspace

@dataclass
class DFSState:
    vector: np.ndarray      # configuration basis
    energy: float
    sx_eigenvalue: float
    h_residual: float
    sx_residual: float


def _clusters(values: np.ndarray, tol: float):
    order = np.argsort(values)
    groups, cur = [], [order[0]]
    for i in order[1:]:
        if values[i] - values[cur[-1]] > tol:
            groups.append(cur)
            cur = []
        cur.append(i)
    groups.append(cur)
    return groups


def dfs_scan(spec: ChainSpec, rtol: float = NULL_RTOL) -> list[DFSState]:
    """Common eigenvectors of the chain Hamiltonian and S_x."""
    es = build_eigenstructure(spec)
    n2 = spec.n_sites
    sx = total_sx(n2)
    H = np.diag(configuration_energies(spec))
    smax = float(n2)        # largest singular value of S_x
    found = []
    for lv in es.levels:
        V = lv.vectors
        w, Y = np.linalg.eigh(V.T @ sx @ V)
        for grp in _clusters(w, 1e-9 * smax):
            s = float(np.mean(w[grp]))
            Q = V @ Y[:, grp]
            # (S_x - s) Q c = 0 covers both (1-P) S_x P v = 0 and P S_x P v = s v
            M = (sx - s * np.eye(len(sx))) @ Q
            _, sv, Wh = np.linalg.svd(M)
            sv = np.concatenate([sv, np.zeros(Q.shape[1] - len(sv))])
            for k in np.flatnonzero(sv <= rtol * smax):
                v = Q @ Wh[k].conj()
                v = v / np.linalg.norm(v)
                found.append(DFSState(
                    v, lv.energy, s,
                    float(np.linalg.norm(H @ v - lv.energy * v)),
                    float(np.linalg.norm(sx @ v - s * v))))
    return found


def special_dfs_state(n_sites: int = 4) -> np.ndarray:
    """(|+-++> - |--+-> - |++-+> + |-+--|)/2 for the N=2, h_2=0 chain."""
    from .chain import from_string
    v = np.zeros(1 << n_sites)
    for s, c in (("+-++", 1), ("--+-", -1), ("++-+", -1), ("-+--", 1)):
        v[from_string(s)] = c / 2
    return v


def commutator_expansion(spec: ChainSpec, c: int) -> np.ndarray:
    """[H, S_x]|eta> from the closed form
    2 sum_n [J eta_n (eta_{n-1} + eta_{n+1}) + g_n eta_n] sigma_n^x |eta>,
    with g_n the signed field on site n and eta = 0 beyond the chain ends."""
    n2 = spec.n_sites
    eta = np.concatenate([[0], spins(c, n2), [0]])
    g = np.zeros(n2)
    for n, h in enumerate(spec.fields_h):
        g[n] += h
        g[n2 - 1 - n] -= h
    out = np.zeros(spec.dim)
    for n in range(1, n2 + 1):
        coef = 2 * (spec.coupling_j * eta[n] * (eta[n - 1] + eta[n + 1]) + g[n - 1] * eta[n])
        out[c ^ (1 << (n - 1))] += coef
    return out


def commutator_matrix(spec: ChainSpec) -> np.ndarray:
    """[H, S_x] built by columns from the closed form."""
    return np.column_stack([commutator_expansion(spec, c) for c in range(spec.dim)])


def commutator_on_eigenstates(spec: ChainSpec, rng: np.random.Generator,
                              n_states: int = 20) -> np.ndarray:
    """Norms of [H, S_x]v for random vectors v inside random energy levels."""
    es = build_eigenstructure(spec)
    C = commutator_matrix(spec)
    out = []
    for _ in range(n_states):
        lv = es.levels[rng.integers(len(es.levels))]
        coef = rng.normal(size=lv.vectors.shape[1])
        v = lv.vectors @ coef / np.linalg.norm(coef)
        out.append(np.linalg.norm(C @ v))
    return np.array(out)


def random_generic_spec(n_half: int, rng: np.random.Generator, J: float = 1.0) -> ChainSpec:
    """Distinct positive fields with sum(h) < J/2."""
    h = rng.uniform(0.05, 1.0, size=n_half)
    h = np.sort(h * rng.uniform(0.2, 0.95) * J / 2 / h.sum())[::-1]
    return ChainSpec(n_half, J, tuple(h))


def dfs_stationarity(spec: ChainSpec, state: np.ndarray, bath: BathSpec,
                     e_uniform: float = 0.1, n_samples: int = 40) -> dict:
    """Evolve a pure state under the uniform-coupling Redfield generator and
    record its fidelity at log-spaced times out to many relaxation times."""
    es = build_eigenstructure(spec)
    gen = redfield_superoperator(es, CouplingSpec(e_uniform), bath)
    V = es.vectors
    n = len(es.energies)
    rates = -np.real(np.linalg.eigvals(gen.static))
    slow = np.min(rates[rates > 1e-12 * np.max(rates)])
    t_max = 50.0 / slow
    rho0 = V.conj().T @ np.outer(state, state.conj()) @ V
    psi = V.conj().T @ state
    times = np.geomspace(1.0 / np.max(rates), t_max, n_samples)
    fid = []
    for t in times:
        r = (expm(gen.static * t) @ rho0.ravel()).reshape(n, n)
        fid.append(float(np.real(psi.conj() @ r @ psi)))
    return {"times": times, "fidelity": np.array(fid), "min_fidelity": float(min(fid)),
            "t_max": t_max, "slowest_rate": float(slow)}
