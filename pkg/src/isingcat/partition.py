"""Sector sets E_q: minimal groups of eigenstates that S_x does not connect.

Degenerate levels leave the eigenbasis undetermined. We fix it by picking a
generic element of the commutant of {H_TLS, S_x} inside each Pi sector and
diagonalising it level by level; its eigenspaces are the irreducible invariant
subspaces, which are exactly the minimal sets. Components are then read off
the S_x graph with a union-find.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .chain import EigenStructure, pi_matrix, total_sx

EDGE_RTOL = 1e-14


class NonMinimalPartition(RuntimeError):
    """A sector set still splits into S_x-disconnected pieces."""


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1

    def groups(self) -> list:
        out = {}
        for i in range(len(self.parent)):
            out.setdefault(self.find(i), []).append(i)
        return sorted(out.values(), key=min)


def sx_matrix(es) -> np.ndarray:
    """<k|S_x|l> in the basis ``es.vectors``."""
    V = es.vectors
    return V.T @ total_sx(es.spec.n_sites) @ V


def commutant(S: np.ndarray, levels: np.ndarray, rtol: float = 1e-10) -> list:
    """Real matrices X, block diagonal in ``levels``, with [X, S] = 0."""
    n = len(S)
    unknowns = [(a, b) for a in range(n) for b in range(n) if levels[a] == levels[b]]
    rows, cols, vals = [], [], []
    for u, (a, b) in enumerate(unknowns):
        # S E_ab - E_ab S with E_ab = |a><b|
        i = np.nonzero(S[:, a])[0]
        rows.extend(i * n + b); cols.extend([u] * len(i)); vals.extend(S[i, a])
        j = np.nonzero(S[b, :])[0]
        rows.extend(a * n + j); cols.extend([u] * len(j)); vals.extend(-S[b, j])
    M = sparse.csr_matrix((vals, (rows, cols)), shape=(n * n, len(unknowns)))
    gram = (M.T @ M).toarray()
    w, v = np.linalg.eigh(gram)
    null = v[:, w <= rtol * max(1.0, w.max())]
    out = []
    for col in null.T:
        X = np.zeros((n, n))
        for u, (a, b) in enumerate(unknowns):
            X[a, b] = col[u]
        out.append(X)
    return out


def _cluster(values: np.ndarray, tol: float) -> np.ndarray:
    order = np.argsort(values)
    labels = np.empty(len(values), dtype=int)
    lab, prev = -1, None
    for i in order:
        if prev is None or values[i] - prev > tol:
            lab += 1
        labels[i] = lab
        prev = values[i]
    return labels


def resolve_basis(es: EigenStructure, seed: int = 12345):
    """Rotate within degenerate levels so S_x is as block diagonal as possible.

    Returns (vectors, energies, parity, level, irreducible_label).
    """
    rng = np.random.default_rng(seed)
    Sx = total_sx(es.spec.n_sites)
    vecs, ens, par, lev, lab = [], [], [], [], []
    offset = 0
    for sign in (1, -1):
        idx = np.nonzero(es.parity == sign)[0]
        if len(idx) == 0:
            continue
        V = es.vectors[:, idx]
        S = V.T @ Sx @ V
        levels = es.level[idx]
        basis = commutant(S, levels)
        X = sum(rng.uniform(-1, 1) * B for B in basis)
        X = 0.5 * (X + X.T)
        local = np.zeros_like(V)
        evals = np.zeros(len(idx))
        for L in np.unique(levels):
            m = np.nonzero(levels == L)[0]
            w, u = np.linalg.eigh(X[np.ix_(m, m)])
            local[:, m] = V[:, m] @ u
            evals[m] = w
        scale = max(1.0, np.abs(evals).max())
        labels = _cluster(evals, 1e-8 * scale) + offset
        offset = labels.max() + 1
        vecs.append(local); ens.append(es.energies[idx]); par.append(es.parity[idx])
        lev.append(levels); lab.append(labels)
    return (np.hstack(vecs), np.concatenate(ens), np.concatenate(par),
            np.concatenate(lev), np.concatenate(lab))


@dataclass(frozen=True)
class SectorPartition:
    """Minimal sets E_q over a resolved eigenbasis.

    ``z_q`` and ``psi`` use Boltzmann factors measured from ``e_ref`` (the
    ground energy) so they stay finite at low temperature; Psi_q is unchanged
    by that shift.
    """
    spec: object
    named: dict
    vectors: np.ndarray
    energies: np.ndarray
    parity: np.ndarray
    level: np.ndarray
    sx: np.ndarray
    sets: tuple
    pi_label: tuple
    temperature: float
    e_ref: float
    z_q: np.ndarray
    psi: np.ndarray          # (n_sets, dim): exp(-(E_k - e_ref)/T)/z_q on the set
    phi: np.ndarray          # (n_sets, dim): indicator of the set

    @property
    def dim(self) -> int:
        return len(self.energies)

    @property
    def n_sets(self) -> int:
        return len(self.sets)

    def membership(self) -> np.ndarray:
        out = np.empty(self.dim, dtype=int)
        for q, s in enumerate(self.sets):
            out[list(s)] = q
        return out

    def index(self, name: str) -> int:
        ov = np.abs(self.vectors.T @ self.named[name])
        i = int(np.argmax(ov))
        if abs(ov[i] - 1) > 1e-9:
            raise KeyError(f"{name} is not a basis vector")
        return i

    def set_of(self, name: str) -> int:
        return int(self.membership()[self.index(name)])

    def psi_pairs(self, pairs) -> np.ndarray:
        """Psi_q laid out on a list of (k, l) pairs (diagonal pairs only)."""
        return _on_pairs(self.psi, pairs)

    def phi_pairs(self, pairs) -> np.ndarray:
        return _on_pairs(self.phi, pairs)


def _on_pairs(per_state, pairs):
    out = np.zeros((per_state.shape[0], len(pairs)))
    for i, (k, l) in enumerate(pairs):
        if k == l:
            out[:, i] = per_state[:, k]
    return out


def connected_sets(sx: np.ndarray, rtol: float = EDGE_RTOL) -> list:
    thr = rtol * max(np.abs(sx).max(), 1e-300)
    uf = UnionFind(len(sx))
    for k, l in zip(*np.nonzero(np.abs(sx) > thr)):
        uf.union(int(k), int(l))
    return uf.groups()


def is_irreducible(S: np.ndarray, energies: np.ndarray) -> bool:
    """True when only multiples of the identity commute with H and S on this span."""
    levels = _cluster(energies, 1e-9 * max(1.0, np.abs(energies).max()))
    return len(commutant(S, levels)) == 1


def build_partition(es: EigenStructure, T: float, sx: np.ndarray | None = None,
                    seed: int = 12345) -> SectorPartition:
    if T <= 0:
        raise ValueError("the sector Gibbs weights need T > 0")
    vectors, energies, parity, level, labels = resolve_basis(es, seed)
    holder = type("B", (), {"vectors": vectors, "spec": es.spec})
    S = sx_matrix(holder) if sx is None else sx
    comps = connected_sets(S)
    pim = pi_matrix(es.spec.n_sites)
    sets, pis = [], []
    for comp in comps:
        if len(set(labels[comp])) != 1 or not is_irreducible(
                S[np.ix_(comp, comp)], energies[comp]):
            raise NonMinimalPartition(f"set {comp} is not minimal")
        pv = np.einsum("ik,ij,jk->k", vectors[:, comp], pim, vectors[:, comp])
        if not np.allclose(pv, pv[0], atol=1e-9) or abs(abs(pv[0]) - 1) > 1e-9:
            raise NonMinimalPartition(f"set {comp} mixes Pi parities")
        sets.append(tuple(comp))
        pis.append(int(round(pv[0])))
    order = sorted(range(len(sets)), key=lambda q: (energies[list(sets[q])].min(), -pis[q]))
    sets = tuple(sets[q] for q in order)
    pis = tuple(pis[q] for q in order)

    e_ref = float(energies.min())
    boltz = np.exp(-(energies - e_ref) / T)
    phi = np.zeros((len(sets), len(energies)))
    for q, s in enumerate(sets):
        phi[q, list(s)] = 1.0
    z = phi @ boltz
    psi = phi * boltz[None, :] / z[:, None]
    return SectorPartition(es.spec, es.named, vectors, energies, parity, level, S,
                           sets, pis, T, e_ref, z, psi, phi)


def sector_gibbs_state(part: SectorPartition, weights) -> np.ndarray:
    """rho_s = sum_q p_q Psi_q, returned in the configuration basis."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (part.n_sets,):
        raise ValueError(f"need {part.n_sets} weights")
    if (w < 0).any() or abs(w.sum() - 1) > 1e-12:
        raise ValueError("weights must be a probability vector")
    pops = w @ part.psi
    V = part.vectors
    return (V * pops[None, :]) @ V.T
