"""Ising chain of 2N two-level systems: configurations, energies, and the
reflection-and-flip symmetry Pi.

Configurations are integers. Bit ``n - 1`` holds the spin of site ``n`` and a
set bit means ``|+>`` (sigma_z = +1). The configuration basis is ordered by
integer value, so ``|-...->`` is index 0 and ``|+...+>`` is index ``2**(2N) - 1``.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np


class ChainSpecError(ValueError):
    """Raised when chain parameters violate the model constraints."""


class DegeneracyAmbiguity(ValueError):
    """Two distinct energies fall inside the grouping tolerance."""


class NonGenericWarning(UserWarning):
    """Field values produce accidental degeneracies."""


@dataclass(frozen=True)
class ChainSpec:
    n_half: int
    coupling_j: float
    fields_h: tuple

    def __post_init__(self):
        object.__setattr__(self, "fields_h", tuple(float(h) for h in self.fields_h))
        if int(self.n_half) != self.n_half or self.n_half < 2:
            raise ChainSpecError("n_half must be an integer >= 2")
        if len(self.fields_h) != self.n_half:
            raise ChainSpecError(
                f"expected {self.n_half} fields, got {len(self.fields_h)}")
        if not self.coupling_j > 0:
            raise ChainSpecError("J must be > 0")
        if any(h < 0 for h in self.fields_h):
            raise ChainSpecError("every h_n must be >= 0")
        if sum(self.fields_h) >= self.coupling_j / 2:
            raise ChainSpecError("sum(h) >= J/2")
        h = self.fields_h
        if any(x == 0 for x in h) or len(set(h)) < len(h):
            warnings.warn("zero or repeated fields: extra degeneracies expected",
                          NonGenericWarning, stacklevel=3)

    @property
    def n_sites(self) -> int:
        return 2 * self.n_half

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    @property
    def ground_energy(self) -> float:
        return -self.coupling_j * (self.n_sites - 1)


def spins(c: int, n_sites: int) -> np.ndarray:
    """sigma_z eigenvalues (+1/-1) of sites 1..n_sites."""
    return np.array([1 if (c >> n) & 1 else -1 for n in range(n_sites)])


def from_string(s: str) -> int:
    """Parse ``'++--'`` (site 1 first) into a configuration."""
    return sum(1 << n for n, ch in enumerate(s) if ch == "+")


def to_string(c: int, n_sites: int) -> str:
    return "".join("+" if (c >> n) & 1 else "-" for n in range(n_sites))


def energy_of(spec: ChainSpec, c: int) -> float:
    s = spins(c, spec.n_sites)
    n2 = spec.n_sites
    bond = -spec.coupling_j * float(np.sum(s[:-1] * s[1:]))
    fld = -sum(h * (s[n] - s[n2 - 1 - n]) for n, h in enumerate(spec.fields_h))
    return bond + fld


def configuration_energies(spec: ChainSpec) -> np.ndarray:
    n2 = spec.n_sites
    c = np.arange(spec.dim)
    s = 2 * ((c[:, None] >> np.arange(n2)) & 1) - 1
    e = -spec.coupling_j * np.sum(s[:, :-1] * s[:, 1:], axis=1).astype(float)
    for n, h in enumerate(spec.fields_h):
        e -= h * (s[:, n] - s[:, n2 - 1 - n])
    return e


def apply_pi(c: int, n_sites: int) -> int:
    """Reverse the site order, then flip every spin."""
    out = 0
    for n in range(n_sites):
        if not (c >> (n_sites - 1 - n)) & 1:
            out |= 1 << n
    return out


def pi_permutation(n_sites: int) -> np.ndarray:
    return np.array([apply_pi(c, n_sites) for c in range(1 << n_sites)])


# ---------------------------------------------------------------------------
# operators in the configuration basis

def pauli(n: int, axis: str, n_sites: int) -> np.ndarray:
    """sigma^axis of site ``n`` (1-based) as a dense matrix."""
    dim = 1 << n_sites
    c = np.arange(dim)
    bit = (c >> (n - 1)) & 1
    up = 2 * bit - 1
    if axis == "z":
        return np.diag(up.astype(float))
    flipped = c ^ (1 << (n - 1))
    if axis == "x":
        m = np.zeros((dim, dim))
        m[flipped, c] = 1.0
        return m
    if axis == "y":
        # sigma^y |+> = i|->, sigma^y |-> = -i|+>
        m = np.zeros((dim, dim), dtype=complex)
        m[flipped, c] = 1j * up
        return m
    raise ValueError(f"unknown axis {axis!r}")


def total_sx(n_sites: int) -> np.ndarray:
    return sum(pauli(n, "x", n_sites) for n in range(1, n_sites + 1))


def pi_matrix(n_sites: int) -> np.ndarray:
    perm = pi_permutation(n_sites)
    m = np.zeros((1 << n_sites, 1 << n_sites))
    m[perm, np.arange(1 << n_sites)] = 1.0
    return m


# ---------------------------------------------------------------------------
# spectrum

@dataclass(frozen=True)
class Level:
    energy: float
    configs: tuple
    vectors: np.ndarray      # (dim, degeneracy), real, orthonormal columns
    parities: tuple          # +1 / -1 per column


@dataclass(frozen=True)
class EigenStructure:
    """Pi-adapted eigenbasis of the diagonal Ising Hamiltonian.

    ``vectors[:, i]`` is the i-th adapted state, ``energies[i]`` its energy,
    ``parity[i]`` its Pi eigenvalue and ``level[i]`` the index of its level.
    """
    spec: ChainSpec
    config_energies: np.ndarray
    levels: tuple
    vectors: np.ndarray
    energies: np.ndarray
    parity: np.ndarray
    level: np.ndarray
    named: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.spec.dim

    def state(self, name: str) -> np.ndarray:
        return self.named[name]

    def index(self, name: str) -> int:
        """Column of ``vectors`` matching a named state (up to sign)."""
        ov = np.abs(self.vectors.T @ self.named[name])
        i = int(np.argmax(ov))
        if abs(ov[i] - 1) > 1e-9:
            raise KeyError(f"{name} is not an adapted basis vector")
        return i


def group_levels(energies: np.ndarray, tol: float = 1e-9, exact_tol: float = 1e-12):
    """Group indices by energy. Returns a list of (energy, indices)."""
    order = np.argsort(energies, kind="stable")
    scale = max(1.0, float(np.max(np.abs(energies))))
    groups = []
    for i in order:
        e = energies[i]
        if groups and abs(e - groups[-1][1][-1]) <= tol * scale:
            groups[-1][1].append(e)
            groups[-1][2].append(i)
        else:
            groups.append([e, [e], [i]])
    out = []
    for _, es, idx in groups:
        if max(es) - min(es) > exact_tol * scale:
            raise DegeneracyAmbiguity(
                f"energies {min(es)!r} and {max(es)!r} are within tolerance "
                "but not equal; tighten tol or change the fields")
        out.append((float(np.mean(es)), sorted(int(i) for i in idx)))
    return out


def _adapted_vectors(configs, n_sites, dim):
    done = set()
    plus, minus = [], []
    for c in configs:
        if c in done:
            continue
        pc = apply_pi(c, n_sites)
        done.update((c, pc))
        v = np.zeros(dim)
        if pc == c:
            v[c] = 1.0
            plus.append(v)
            continue
        w = np.zeros(dim)
        v[c] = v[pc] = 2 ** -0.5
        w[c], w[pc] = 2 ** -0.5, -(2 ** -0.5)
        plus.append(v)
        minus.append(w)
    vecs = plus + minus
    return np.array(vecs).T, (1,) * len(plus) + (-1,) * len(minus)


def named_states(spec: ChainSpec) -> dict:
    n, n2, dim = spec.n_half, spec.n_sites, spec.dim
    pim = pi_matrix(n2)

    def ket(s):
        v = np.zeros(dim)
        v[from_string(s)] = 1.0
        return v

    up, down = ket("+" * n2), ket("-" * n2)
    out = {
        "up": up,
        "down": down,
        "scs-": (up - down) / np.sqrt(2),
        "scs+": (up + down) / np.sqrt(2),
        "a": ket("+" * n + "-" * n),
        "b": ket("-" * n + "+" * n),
    }
    c = ket("+" * (n - 1) + "-" * (n + 1))
    d = ket("-" * (n - 1) + "+" * (n + 1))
    for sign, tag in ((1, "+"), (-1, "-")):
        out["c" + tag] = (c + sign * pim @ c) / np.sqrt(2)
        out["d" + tag] = (d + sign * pim @ d) / np.sqrt(2)
    return out


def build_eigenstructure(spec: ChainSpec, tol: float = 1e-9) -> EigenStructure:
    cfg_e = configuration_energies(spec)
    levels = []
    for e, configs in group_levels(cfg_e, tol):
        vecs, par = _adapted_vectors(configs, spec.n_sites, spec.dim)
        levels.append(Level(e, tuple(configs), vecs, par))
    vectors = np.hstack([lv.vectors for lv in levels])
    energies = np.concatenate([[lv.energy] * len(lv.configs) for lv in levels])
    parity = np.concatenate([lv.parities for lv in levels])
    level = np.concatenate([[i] * len(lv.configs) for i, lv in enumerate(levels)])
    return EigenStructure(spec, cfg_e, tuple(levels), vectors, energies,
                          parity.astype(int), level.astype(int), named_states(spec))


def one_interface_states(spec: ChainSpec) -> list:
    """All configurations with a single domain wall, with their energies.

    The wall sits between sites m and m+1; eta is the spin left of it.
    """
    n, n2 = spec.n_half, spec.n_sites
    out = []
    for m, eta in itertools.product(range(1, n2), (1, -1)):
        s = ("+" if eta > 0 else "-") * m + ("-" if eta > 0 else "+") * (n2 - m)
        mp = m if m < n else n2 - m
        e = spec.ground_energy + 2 * spec.coupling_j - 2 * eta * sum(spec.fields_h[:mp])
        out.append((from_string(s), e))
    return out
