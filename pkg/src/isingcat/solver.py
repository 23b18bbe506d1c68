"""Asymptotic states of the chain: uniform family, thermal state, driven
harmonic balance (direct and perturbative) and the two-bath variant.

Harmonics u^(p) live on ordered eigenstate pairs (k, l) with E_k - E_l = p*w.
With G0 = -i gamma and G_{+1}, G_{-1} the drive couplings to the neighbouring
harmonics, they satisfy

    G0^(p) u^(p) + eps_f G_{+1}^(p) u^(p+1) + eps_f G_{-1}^(p) u^(p-1) = 0 .

The time-dependent drive this corresponds to is
eps_f (Lam e^{iwt} + Lam^dag e^{-iwt}) with Lam = sum lambda_{n,nu} sigma_n^nu.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import mpmath
import numpy as np
from scipy import linalg, sparse

from .bath import (BathSpec, CouplingSpec, coupling_channels, gamma_block,
                   gamma_entries, gamma_entries_mp, noise_power, resonant_pairs)
from .chain import pauli
from .partition import SectorPartition, sector_gibbs_state

NULL_RTOL = 1e-10
THERMAL_RTOL = 1e-8
NEG_TOL = 1e-8


class NoNullVector(RuntimeError):
    """The linear system has no null vector at the requested tolerance."""


class DegenerateNullspace(RuntimeError):
    """More than one null vector: the steady state is not unique."""


class NegativePopulation(RuntimeError):
    """The stationary vector of the sector rates has a negative entry."""


# ---------------------------------------------------------------------------
# containers

@dataclass
class SteadyHarmonics:
    """Solved harmonics. ``steady`` is rho_s in the configuration basis."""
    harmonics: dict                  # p -> csr matrix over the working basis
    steady: np.ndarray
    vectors: np.ndarray              # working basis (columns) in configuration space
    energies: np.ndarray
    sector_populations: np.ndarray | None = None
    method: str = ""
    diagnostics: dict = field(default_factory=dict)

    def u(self, p: int) -> np.ndarray:
        n = len(self.energies)
        m = self.harmonics.get(p)
        return np.zeros((n, n), complex) if m is None else m.toarray()

    def populations(self) -> np.ndarray:
        """Diagonal of u^(0) in the working basis."""
        return np.real(np.diag(self.u(0)))


@dataclass
class EffectiveRateMatrix:
    """Rates r_qq' between sector sets; columns sum to zero."""
    r: np.ndarray
    scalar_r: float | None = None
    explicit: np.ndarray | None = None
    imag_residual: float = 0.0

    def column_sums(self) -> np.ndarray:
        return self.r.sum(axis=0)


@dataclass
class UniformFamily:
    """rho_s(p) = sum_q p_q Psi_q for any probability vector p."""
    partition: SectorPartition
    nullity: int
    residuals: np.ndarray            # |G Psi_q| per set

    def state(self, weights) -> np.ndarray:
        return sector_gibbs_state(self.partition, weights)


@dataclass
class GeneratorBlocks:
    basis: object
    coupling: CouplingSpec
    bath: BathSpec
    second_bath: BathSpec | None
    omega: float
    P: int
    pairs: dict
    g0: dict
    g0_tilde: dict
    g_plus: dict
    g_minus: dict
    f: dict
    drive: np.ndarray

    @property
    def energies(self) -> np.ndarray:
        return self.basis.energies

    @property
    def vectors(self) -> np.ndarray:
        return self.basis.vectors

    def condition_numbers(self) -> dict:
        out = {}
        for p, g in self.g0_tilde.items():
            if p != 0 and g.size:
                s = linalg.svdvals(g)
                out[p] = float(s[0] / s[-1])
        return out


# ---------------------------------------------------------------------------
# assembly

def drive_operator(coupling: CouplingSpec, n_half: int) -> np.ndarray:
    """Lam = sum lambda_{n,nu} sigma_n^nu in the configuration basis."""
    n2 = 2 * n_half
    out = np.zeros((1 << n2, 1 << n2), complex)
    for (site, axis), lam in coupling.weights(n_half).items():
        out += lam * pauli(site, axis, n2)
    return out


def _drive_block(lam: np.ndarray, rows, cols) -> np.ndarray:
    """Coefficient of u_{k'l'} in sum_j [lam_jl u_kj - lam_kj u_jl]."""
    k = np.array([r[0] for r in rows])[:, None]
    l = np.array([r[1] for r in rows])[:, None]
    kp = np.array([c[0] for c in cols])[None, :]
    lp = np.array([c[1] for c in cols])[None, :]
    return (k == kp) * lam[lp, l] - (l == lp) * lam[k, kp]


def build_blocks(basis, coupling: CouplingSpec, bath: BathSpec,
                 second_bath: BathSpec | None = None, P: int = 1,
                 tol: float = 1e-9) -> GeneratorBlocks:
    """Blocks of the harmonic system over the eigenbasis ``basis``.

    ``basis`` is a SectorPartition or an EigenStructure; anything with
    ``vectors``, ``energies`` and ``spec``.
    """
    if not 1 <= P <= 3:
        raise ValueError("P must be 1, 2 or 3")
    spec = basis.spec
    coupling.check_drive_weights(spec.n_half)
    omega = coupling.omega(spec)
    E = basis.energies
    scale = tol * spec.coupling_j
    full = coupling_channels(basis, coupling, bath, second_bath)
    tilde = coupling_channels(basis, replace(coupling, eps_local=0.0), bath, None)
    V = basis.vectors
    lam = V.conj().T @ drive_operator(coupling, spec.n_half) @ V

    pairs, g0, g0t = {}, {}, {}
    for p in range(-P, P + 1):
        pr = resonant_pairs(E, p, omega, scale) if (p == 0 or omega > 0) else []
        pairs[p] = tuple(pr)
        if pr:
            g0[p] = -1j * gamma_entries(full, E, pr, pr, p * omega)
            g0t[p] = -1j * gamma_entries(tilde, E, pr, pr, p * omega)
        else:
            g0[p] = g0t[p] = np.zeros((0, 0), complex)
    g_plus, g_minus = {}, {}
    lam_dag = lam.conj().T
    for p in range(-P, P + 1):
        up = pairs.get(p + 1, ())
        dn = pairs.get(p - 1, ())
        g_plus[p] = (_drive_block(lam, pairs[p], up) if pairs[p] and up
                     else np.zeros((len(pairs[p]), len(up)), complex))
        g_minus[p] = (_drive_block(lam_dag, pairs[p], dn) if pairs[p] and dn
                      else np.zeros((len(pairs[p]), len(dn)), complex))
    f = {p: np.linalg.inv(g0t[p]) for p in g0t if p != 0 and g0t[p].size}
    return GeneratorBlocks(basis, coupling, bath, second_bath, omega, P, pairs,
                           g0, g0t, g_plus, g_minus, f, lam)


def harmonic_system(blocks: GeneratorBlocks, eps_drive: float):
    """Dense matrix of the coupled harmonic equations and the block offsets."""
    ps = [p for p in range(-blocks.P, blocks.P + 1) if blocks.pairs[p]]
    off, n = {}, 0
    for p in ps:
        off[p] = n
        n += len(blocks.pairs[p])
    M = np.zeros((n, n), complex)
    for p in ps:
        a = slice(off[p], off[p] + len(blocks.pairs[p]))
        M[a, a] = blocks.g0[p]
        for q, g in ((p + 1, blocks.g_plus[p]), (p - 1, blocks.g_minus[p])):
            if q in off and eps_drive:
                b = slice(off[q], off[q] + len(blocks.pairs[q]))
                M[a, b] = eps_drive * g
    return M, off


# ---------------------------------------------------------------------------
# linear algebra helpers

def nullspace(M: np.ndarray, rtol: float = NULL_RTOL) -> np.ndarray:
    """Columns spanning the numerical nullspace (singular values <= rtol*smax)."""
    _, s, vh = linalg.svd(M)
    smax = s[0] if len(s) else 0.0
    small = s <= rtol * smax
    # a square matrix has as many right singular vectors as columns
    return vh[small].conj().T


def _trace_rows(pairs) -> list:
    return [i for i, (k, l) in enumerate(pairs) if k == l]


def _solve_mp(M, trace_idx, drop: int, dps: int) -> np.ndarray:
    """Replace equation ``drop`` by the trace condition and solve in mpmath.

    ``M`` is a numpy array or an mpmath matrix.
    """
    n = M.rows if isinstance(M, mpmath.matrix) else len(M)
    with mpmath.workdps(dps):
        if isinstance(M, mpmath.matrix):
            A = M.copy()
        else:
            A = mpmath.matrix(n, n)
            for i in range(n):
                for j in range(n):
                    v = M[i, j]
                    if v != 0:
                        A[i, j] = mpmath.mpc(v.real, v.imag)
        for j in range(n):
            A[drop, j] = 0
        for j in trace_idx:
            A[drop, j] = 1
        b = mpmath.matrix(n, 1)
        b[drop] = 1
        x = mpmath.lu_solve(A, b)
        return np.array([complex(x[i]) for i in range(n)])


def stationary_distribution(R: np.ndarray, neg_tol: float = NEG_TOL) -> np.ndarray:
    """Probability vector p with R p = 0 for a rate matrix with zero column sums.

    Rows are equilibrated, one is replaced by sum(p) = 1 and the system is
    solved by least squares.
    """
    R = np.asarray(R, dtype=float)
    n = len(R)
    if n == 1:
        return np.ones(1)
    scale = np.abs(R).max(axis=1)
    scale[scale == 0] = 1.0
    A = R / scale[:, None]
    A = np.vstack([A[1:], np.ones(n)])
    b = np.zeros(n)
    b[-1] = 1.0
    p, *_ = np.linalg.lstsq(A, b, rcond=None)
    if (p < -neg_tol).any():
        raise NegativePopulation(f"stationary vector has entries {p}")
    p = np.clip(p, 0, None)
    return p / p.sum()


def stationary_gth(R: np.ndarray) -> np.ndarray:
    """Grassmann-Taksar-Heyman elimination; subtraction free, so tiny rates survive."""
    Q = np.array(R, dtype=float).T.copy()   # Q[i, j] = rate i -> j
    np.fill_diagonal(Q, 0.0)
    n = len(Q)
    for k in range(n - 1, 0, -1):
        s = Q[k, :k].sum()
        if s <= 0:
            raise NoNullVector("reducible chain: state with no outflow to lower indices")
        Q[:k, :k] += np.outer(Q[:k, k], Q[k, :k]) / s
        Q[:k, k] /= s
    p = np.zeros(n)
    p[0] = 1.0
    for k in range(1, n):
        p[k] = p[:k] @ Q[:k, k]
    return p / p.sum()


def _to_config(u0: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    rho = vectors @ u0 @ vectors.conj().T
    return 0.5 * (rho + rho.conj().T)


def _harmonic_matrices(blocks, off, x) -> dict:
    n = len(blocks.energies)
    out = {}
    for p, o in off.items():
        pr = blocks.pairs[p]
        k = [a for a, _ in pr]
        l = [b for _, b in pr]
        out[p] = sparse.csr_matrix((x[o:o + len(pr)], (k, l)), shape=(n, n))
    return out


# ---------------------------------------------------------------------------
# steady-state solvers

def gibbs_state(es, T: float) -> np.ndarray:
    """exp(-H/T)/Z in the configuration basis."""
    e = es.config_energies
    w = np.exp(-(e - e.min()) / T)
    return np.diag(w / w.sum())


def quadratic_form(upsilon: np.ndarray, phi: np.ndarray) -> float:
    return float(phi @ upsilon @ phi)


def solve_uniform(part: SectorPartition, coupling: CouplingSpec, bath: BathSpec,
                  rtol: float = NULL_RTOL) -> UniformFamily:
    if coupling.eps_local or coupling.eps_drive:
        raise ValueError("the uniform family needs eps_local = eps_drive = 0")
    rt = gamma_block(part, coupling, bath, p=0, omega=0.0)
    G = -1j * rt.entries
    psi = part.psi_pairs(rt.pairs)
    norm = np.abs(G).max()
    res = np.array([np.abs(G @ v).max() / norm for v in psi])
    if (res > 1e-10).any():
        raise NoNullVector(f"sector Gibbs vectors are not stationary: {res}")
    nullity = nullspace(G, rtol).shape[1]
    return UniformFamily(part, nullity, res)


def solve_thermal(rt, es, T: float, rtol: float = THERMAL_RTOL,
                  dps: int | None = None, channels=None) -> np.ndarray:
    """Unique steady state of the undriven p = 0 generator (configuration basis).

    With ``dps`` the generator is rebuilt in mpmath from ``channels`` (needed
    once Boltzmann factors of the upward rates underflow double precision)
    and solved with the trace condition in place of one population equation.
    """
    if T <= 0:
        raise ValueError("thermal mode needs T > 0")
    if dps is None:
        G = -1j * rt.entries
        ns = nullspace(G, rtol)
        if ns.shape[1] == 0:
            raise NoNullVector("p = 0 generator has no null vector")
        if ns.shape[1] > 1:
            raise DegenerateNullspace(
                f"nullspace dimension {ns.shape[1]}; increase eps_local or set dps")
        x = ns[:, 0]
        tr = x[_trace_rows(rt.pairs)].sum()
        x = x / tr
    else:
        if channels is None:
            raise ValueError("the mpmath thermal solve needs the bath channels")
        with mpmath.workdps(dps):
            G = gamma_entries_mp(channels, es.energies, rt.pairs, 0.0)
        idx = _trace_rows(rt.pairs)
        x = _solve_mp(G, idx, idx[0], dps)
    n = len(es.energies)
    u0 = np.zeros((n, n), complex)
    for (k, l), v in zip(rt.pairs, x):
        u0[k, l] = v
    return _to_config(u0, es.vectors)


def solve_driven_direct(blocks: GeneratorBlocks, eps_drive: float | None = None,
                        dps: int | None = None, rtol: float = NULL_RTOL) -> SteadyHarmonics:
    """Null vector of the full truncated harmonic system.

    With ``dps`` set, one population equation is swapped for the trace
    condition and the system is solved in mpmath at that precision. This
    resolves sector populations set by exponentially small rates, which a
    double-precision nullspace cannot separate.
    """
    eps = blocks.coupling.eps_drive if eps_drive is None else eps_drive
    if eps and blocks.bath.temperature == 0:
        raise ValueError("driven mode at T = 0 has no unique steady state")
    M, off = harmonic_system(blocks, eps)
    trace_idx = [off[0] + i for i in _trace_rows(blocks.pairs[0])]
    diag = {}
    if dps is None:
        ns = nullspace(M, rtol)
        if ns.shape[1] == 0:
            raise NoNullVector("harmonic system has no null vector")
        if ns.shape[1] > 1:
            raise DegenerateNullspace(
                f"nullspace dimension {ns.shape[1]}; try dps=100")
        x = ns[:, 0]
        x = x / x[trace_idx].sum()
    else:
        x = _solve_mp(M, trace_idx, trace_idx[0], dps)
        diag["dps"] = dps
    diag["residual"] = float(np.abs(M @ x).max() / np.abs(M).max())
    h = _harmonic_matrices(blocks, off, x)
    rho = _to_config(h[0].toarray(), blocks.vectors)
    return SteadyHarmonics(h, rho, blocks.vectors, blocks.energies, None,
                           "driven-direct", diag)


def _sector_vectors(part: SectorPartition, pairs):
    return part.phi_pairs(pairs), part.psi_pairs(pairs)


def rate_kernel(blocks: GeneratorBlocks) -> np.ndarray:
    """G_1^(0) F^(1) G_-1^(1) + G_-1^(0) F^(-1) G_1^(-1) on the p = 0 pairs."""
    n0 = len(blocks.pairs[0])
    K = np.zeros((n0, n0), complex)
    if 1 in blocks.f:
        K += blocks.g_plus[0] @ blocks.f[1] @ blocks.g_minus[1]
    if -1 in blocks.f:
        K += blocks.g_minus[0] @ blocks.f[-1] @ blocks.g_plus[-1]
    return K


def explicit_rates(blocks: GeneratorBlocks, part: SectorPartition) -> np.ndarray:
    """Sector rates from the closed-form double sum over resonant pairs."""
    E = blocks.energies
    T = part.temperature
    memb = part.membership()
    nq = part.n_sets
    boltz = np.exp(-(E - part.e_ref) / T)
    lam = blocks.drive
    sig = {1: lam, -1: lam.conj().T}
    acc = np.zeros((nq, nq), complex)
    for p in (1, -1):
        if p not in blocks.f:
            continue
        pr = blocks.pairs[p]
        k = np.array([a for a, _ in pr])
        l = np.array([b for _, b in pr])
        s = sig[p][k, l]
        # term[i, j] = sigma_{k_i l_i} sigma_{k'_j l'_j} F_{ij} e^{-E_k'_j / T}
        term = (s[:, None] * s[None, :]) * (-1j * blocks.f[p]) * boltz[k][None, :]
        for q in range(nq):
            for qp in range(nq):
                w = -((memb[l] == q)[:, None] & (memb[k] == qp)[None, :]).astype(float)
                if q == qp:
                    w = w + (memb[k] == q)[None, :]
                acc[q, qp] += (term * w).sum()
    return 2 * np.real(acc) / part.z_q[None, :]


def scalar_rate(blocks: GeneratorBlocks, part: SectorPartition) -> float:
    """e^{E0/T} Re[1/gamma_{c-a,c-a}(i0+ + w)] with a zero-temperature bath.

    Energies are measured from the ground energy, so E0 contributes 1.
    """
    i, j = part.index("c-"), part.index("a")
    cold = replace(blocks.bath, temperature=0.0)
    tilde = coupling_channels(blocks.basis, replace(blocks.coupling, eps_local=0.0), cold)
    g = gamma_entries(tilde, blocks.energies, [(i, j)], [(i, j)], blocks.omega)[0, 0]
    return float(np.real(1.0 / g))


def solve_driven_perturbative(blocks: GeneratorBlocks, part: SectorPartition,
                              eps_drive: float | None = None):
    """Second-order elimination of u^(+-1) onto the sector populations."""
    eps = blocks.coupling.eps_drive if eps_drive is None else eps_drive
    if blocks.bath.temperature == 0:
        raise ValueError("driven mode at T = 0 has no unique steady state")
    pr0 = blocks.pairs[0]
    phi, psi = _sector_vectors(part, pr0)
    K = rate_kernel(blocks)
    # F = (-i gamma~)^-1 = i gamma~^-1, so the real rates are -i Phi^T K Psi
    rc = -1j * (phi @ K @ psi.T)
    scale = max(np.abs(rc).max(), 1e-300)
    R = np.real(rc)
    rates = EffectiveRateMatrix(R, None, explicit_rates(blocks, part),
                                float(np.abs(np.imag(rc)).max() / scale))
    try:
        rates.scalar_r = scalar_rate(blocks, part)
    except KeyError:
        pass
    pops = stationary_distribution(R)

    u0 = pops @ psi
    h = {0: u0}
    for p, g in ((1, blocks.g_minus), (-1, blocks.g_plus)):
        if p in blocks.f:
            h[p] = -eps * blocks.f[p] @ (g[p] @ u0)
    n = len(blocks.energies)
    mats = {}
    for p, x in h.items():
        prs = blocks.pairs[p]
        mats[p] = sparse.csr_matrix((x, ([a for a, _ in prs], [b for _, b in prs])),
                                    shape=(n, n))
    rho = sector_gibbs_state(part, pops)
    sh = SteadyHarmonics(mats, rho, blocks.vectors, blocks.energies, pops,
                         "driven-perturbative")
    return rates, sh


def two_bath_rates(part: SectorPartition, coupling: CouplingSpec,
                   bath2: BathSpec) -> np.ndarray:
    """Golden-rule sector rates induced by the second bath through sigma_n^x."""
    V = part.vectors
    n2 = part.spec.n_sites
    m2 = np.zeros((part.dim, part.dim))
    for n in range(1, n2 + 1):
        s = V.conj().T @ pauli(n, "x", n2) @ V
        m2 += np.abs(s) ** 2
    E = part.energies
    boltz = np.exp(-(E - part.e_ref) / part.temperature)
    # W(E_l - E_k): bath 2 absorbs the energy released by l -> k
    W = noise_power(bath2, E[None, :] - E[:, None])   # [k, l]
    trans = coupling.eps_bath2 ** 2 * W * m2 * boltz[None, :]
    memb = part.membership()
    nq = part.n_sets
    onehot = np.eye(nq)[memb]                         # (dim, nq)
    R = onehot.T @ trans @ onehot / part.z_q[None, :]
    np.fill_diagonal(R, 0.0)
    R[np.diag_indices(nq)] = -R.sum(axis=0)
    return R


def solve_two_bath(part: SectorPartition, coupling: CouplingSpec, bath1: BathSpec,
                   bath2: BathSpec) -> tuple:
    if coupling.eps_drive:
        raise ValueError("two-bath mode needs eps_drive = 0")
    if not coupling.eps_bath2:
        raise ValueError("two-bath mode needs eps_bath2 > 0")
    if abs(bath1.temperature - part.temperature) > 1e-15 * max(1.0, part.temperature):
        raise ValueError("partition temperature differs from bath 1")
    R = two_bath_rates(part, coupling, bath2)
    pops = stationary_distribution(R)
    rho = sector_gibbs_state(part, pops)
    u0 = np.diag(pops @ part.psi)
    sh = SteadyHarmonics({0: sparse.csr_matrix(u0)}, rho, part.vectors,
                         part.energies, pops, "two-bath")
    return EffectiveRateMatrix(R), sh


def low_t_freezeout_report(sh: SteadyHarmonics, es, T: float) -> dict:
    """Population above E0 + 3J (two or more interfaces) against exp(-3J/T)."""
    J = es.spec.coupling_j
    E = sh.energies
    pops = sh.populations()
    e0 = es.spec.ground_energy
    hi = E > e0 + 3 * J + 1e-9 * J
    mass = float(pops[hi].sum())
    bound = float(np.exp(-3 * J / T))
    return {"multi_interface_mass": mass, "bound": bound,
            "ratio": mass / bound if bound > 0 else float("inf"),
            "below_bound": mass < bound}
