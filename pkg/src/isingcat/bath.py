"""Thermal baths and the relaxation tensor gamma_{kl,k'l'}(i0+ + w).

Each bath is an Ohmic continuum. ``noise_power`` gives the golden-rule
spectrum W(nu) for the bath *absorbing* energy nu, so W(-nu) = exp(-nu/T) W(nu).
Sums over bath eigenstates are replaced by W(nu)/(2 pi), and principal parts
by the Hilbert transform

    shift(y) = (1/2pi) P int W(nu) / (y - nu) dnu .
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate

from .chain import EigenStructure, pauli, total_sx


class EmptyBlock(ValueError):
    """No eigenstate pair satisfies the resonance condition."""


@dataclass(frozen=True)
class BathSpec:
    temperature: float
    eta: float = 1.0
    cutoff: float = 10.0
    include_shifts: bool = False
    model: str = "ohmic"

    def __post_init__(self):
        if self.model != "ohmic":
            raise ValueError(f"unsupported bath model {self.model!r}")
        if self.temperature < 0:
            raise ValueError("T must be >= 0")
        if self.eta <= 0 or self.cutoff <= 0:
            raise ValueError("eta and cutoff must be > 0")


@dataclass(frozen=True)
class CouplingSpec:
    e_uniform: float
    eps_local: float = 0.0
    eps_drive: float = 0.0
    drive_frequency: object = "resonant"
    drive_weights: object = None     # {(site, axis): complex}; default sigma_N^x
    local_axes: str = "xyz"
    eps_bath2: float = 0.0

    def __post_init__(self):
        if self.eps_local < 0 or self.eps_drive < 0 or self.eps_bath2 < 0:
            raise ValueError("coupling strengths must be >= 0")
        if set(self.local_axes) - set("xyz"):
            raise ValueError("local_axes must be drawn from 'xyz'")

    def weights(self, n_half: int) -> dict:
        if self.drive_weights is None:
            return {(n_half, "x"): 1.0}
        return dict(self.drive_weights)

    def check_drive_weights(self, n_half: int):
        lam = self.weights(n_half)
        n = n_half
        amp = (lam.get((n, "x"), 0) - 1j * lam.get((n, "y"), 0)
               - lam.get((n + 1, "x"), 0) - 1j * lam.get((n + 1, "y"), 0))
        if abs(amp) == 0:
            raise ValueError("drive weights give a vanishing c-a matrix element")

    def omega(self, spec) -> float:
        if self.drive_frequency == "resonant":
            return 2 * spec.fields_h[-1]
        return float(self.drive_frequency)


def spectral_density(b: BathSpec, nu):
    nu = np.abs(np.asarray(nu, dtype=float))
    return b.eta * nu * np.exp(-nu / b.cutoff)


def noise_power(b: BathSpec, nu):
    """W(nu): rate density for the bath to absorb energy nu."""
    nu = np.asarray(nu, dtype=float)
    out = np.empty_like(nu)
    T = b.temperature
    pos, neg, zero = nu > 0, nu < 0, nu == 0
    jp = spectral_density(b, nu[pos])
    jn = spectral_density(b, nu[neg])
    if T == 0:
        out[pos] = 2 * np.pi * jp
        out[neg] = 0.0
        out[zero] = 0.0
    else:
        # n_B + 1 = 1 / (1 - e^{-x}),  n_B = e^{-x} / (1 - e^{-x})
        xp = nu[pos] / T
        xn = -nu[neg] / T
        out[pos] = 2 * np.pi * jp / -np.expm1(-xp)
        out[neg] = 2 * np.pi * jn * np.exp(-xn) / -np.expm1(-xn)
        out[zero] = 2 * np.pi * b.eta * T
    return out if out.ndim else float(out)


def _w_scalar(b, x):
    return float(noise_power(b, np.array(x)))


@lru_cache(maxsize=200_000)
def _shift_cached(b: BathSpec, y: float) -> float:
    T, wc = b.temperature, b.cutoff
    lo = -(40 * T + 1e-12) if T > 0 else 0.0
    lo = min(lo, y - 1.0)
    hi = max(60 * wc, abs(y) + 60 * wc)
    f = lambda nu: _w_scalar(b, nu)
    opts = dict(epsabs=1e-10, epsrel=1e-10, limit=400)
    if lo < y < hi:
        # P int f(nu)/(nu - y)
        pv, _ = integrate.quad(f, lo, hi, weight="cauchy", wvar=y, **opts)
    else:
        pv, _ = integrate.quad(lambda nu: f(nu) / (nu - y), lo, hi, **opts)
    return -pv / (2 * np.pi)


def lamb_shift(b: BathSpec, y):
    """shift(y) = (1/2pi) P int W(nu)/(y - nu) dnu (vectorised over y)."""
    y = np.asarray(y, dtype=float)
    flat = [_shift_cached(b, float(np.round(v, 12))) for v in y.ravel()]
    return np.array(flat).reshape(y.shape) if y.ndim else flat[0]


def half_rate(b: BathSpec, y):
    """g(y) = W(y)/2 + i shift(y); the shift only when the bath asks for it."""
    y = np.asarray(y, dtype=float)
    g = 0.5 * np.asarray(noise_power(b, y), dtype=complex)
    if b.include_shifts:
        g = g + 1j * lamb_shift(b, y)
    return g


# ---------------------------------------------------------------------------
# system side

@dataclass(frozen=True)
class Channel:
    """One independent bath channel: system operator (already scaled) and bath."""
    op: np.ndarray
    bath: BathSpec
    label: str


def coupling_channels(es, coupling: CouplingSpec, bath: BathSpec,
                      second_bath: BathSpec | None = None) -> list:
    """Independent channels expressed in the basis ``es.vectors``."""
    n2 = es.spec.n_sites
    V = es.vectors
    rot = lambda m: V.conj().T @ m @ V
    out = []
    if coupling.e_uniform:
        out.append(Channel(coupling.e_uniform * rot(total_sx(n2)), bath, "uniform"))
    if coupling.eps_local:
        for n in range(1, n2 + 1):
            for ax in coupling.local_axes:
                out.append(Channel(coupling.eps_local * rot(pauli(n, ax, n2)),
                                   bath, f"local {ax}{n}"))
    if second_bath is not None and coupling.eps_bath2:
        for n in range(1, n2 + 1):
            out.append(Channel(coupling.eps_bath2 * rot(pauli(n, "x", n2)),
                               second_bath, f"bath2 x{n}"))
    return out


def resonant_pairs(energies: np.ndarray, p: int, omega: float, tol: float = 1e-9) -> list:
    """Ordered pairs (k, l) with E_k - E_l = p * omega."""
    diff = energies[:, None] - energies[None, :]
    k, l = np.nonzero(np.abs(diff - p * omega) < tol)
    return list(zip(k.tolist(), l.tolist()))


@dataclass(frozen=True)
class RateTensor:
    p_index: int
    omega: float
    pairs: tuple
    entries: np.ndarray

    def entry(self, kl, klp) -> complex:
        idx = {pr: i for i, pr in enumerate(self.pairs)}
        return self.entries[idx[tuple(kl)], idx[tuple(klp)]]


def _channel_block(ch: Channel, E: np.ndarray, rows, cols, w: float) -> np.ndarray:
    A = ch.op
    k = np.array([r[0] for r in rows])[:, None]
    l = np.array([r[1] for r in rows])[:, None]
    kp = np.array([c[0] for c in cols])[None, :]
    lp = np.array([c[1] for c in cols])[None, :]
    g = lambda y: half_rate(ch.bath, y)
    diag = (k == kp) & (l == lp)

    t1 = A[lp, l] * A[k, kp] * (g(w + E[lp] - E[k]) + np.conj(g(-w - E[l] + E[kp])))
    t1 = np.where(diag, 0.0, t1)

    out = t1.astype(complex)
    dim = len(E)
    # delta_{ll'} sum_j A_kj A_jk' g(w + E_l - E_j)
    same_l = (l == lp)
    if same_l.any():
        rr, cc = np.nonzero(same_l)
        kk, ll, kpp = k[rr, 0], l[rr, 0], kp[0, cc]
        gj = g(w + E[ll][:, None] - E[None, :])            # (n, dim)
        terms = A[kk, :] * A[:, kpp].T * gj
        # the j = k piece on the diagonal is handled in closed form below
        mask = diag[rr, cc]
        terms[mask, kk[mask]] = 0.0
        out[rr, cc] -= terms.sum(axis=1)
    same_k = (k == kp)
    if same_k.any():
        rr, cc = np.nonzero(same_k)
        kk, ll, lpp = k[rr, 0], l[rr, 0], lp[0, cc]
        gj = np.conj(g(-w - E[None, :] + E[kk][:, None]))
        terms = A[lpp, :] * A[:, ll].T * gj
        mask = diag[rr, cc]
        terms[mask, ll[mask]] = 0.0
        out[rr, cc] -= terms.sum(axis=1)
    if diag.any():
        rr, cc = np.nonzero(diag)
        akk = np.real(A[k[rr, 0], k[rr, 0]])
        all_ = np.real(A[l[rr, 0], l[rr, 0]])
        g0 = complex(g(np.array(0.0)))
        out[rr, cc] += -g0.real * (akk - all_) ** 2 - 1j * g0.imag * (akk ** 2 - all_ ** 2)
    return out


def gamma_entries(channels, energies, rows, cols, w: float) -> np.ndarray:
    """gamma_{kl,k'l'}(i0+ + w) for every row pair (k,l) and column pair (k',l')."""
    out = np.zeros((len(rows), len(cols)), dtype=complex)
    for ch in channels:
        out += _channel_block(ch, energies, rows, cols, w)
    return out


def gamma_block(es, coupling: CouplingSpec, bath: BathSpec,
                second_bath: BathSpec | None = None, p: int = 0,
                omega: float = 0.0, tol: float = 1e-9, channels=None) -> RateTensor:
    """Block of gamma at harmonic p over pairs with E_k - E_l = p*omega."""
    pairs = resonant_pairs(es.energies, p, omega, tol)
    if not pairs:
        raise EmptyBlock(f"no pair resonant with harmonic p={p}")
    if channels is None:
        channels = coupling_channels(es, coupling, bath, second_bath)
    ent = gamma_entries(channels, es.energies, pairs, pairs, p * omega)
    return RateTensor(p, omega, tuple(pairs), ent)


def noise_power_mp(b: BathSpec, nu):
    """W(nu) in mpmath at the working precision; survives exp(-nu/T) < 1e-308."""
    nu = mpmath.mpf(nu)
    T = mpmath.mpf(b.temperature)
    a = abs(nu)
    if nu == 0:
        return 2 * mpmath.pi * b.eta * T
    j = b.eta * a * mpmath.exp(-a / b.cutoff)
    if T == 0:
        return 2 * mpmath.pi * j if nu > 0 else mpmath.mpf(0)
    x = a / T
    nb = 1 / mpmath.expm1(x)
    return 2 * mpmath.pi * j * (nb + 1 if nu > 0 else nb)


def gamma_entries_mp(channels, energies, pairs, w: float = 0.0):
    """gamma_{kl,k'l'}(i0+ + w) over ``pairs`` as an mpmath matrix.

    Written as the literal four-term sum, so it also serves as an
    independent check of the vectorised assembly. Principal parts are not
    supported here.
    """
    E = [mpmath.mpf(float(e)) for e in energies]
    w = mpmath.mpf(w)
    n = len(pairs)
    out = mpmath.matrix(n, n)
    for ch in channels:
        if ch.bath.include_shifts:
            raise ValueError("the mpmath path has no Lamb shifts")
        A = ch.op
        dim = len(E)
        cache = {}

        def g(y):
            key = mpmath.nstr(y, 30)
            if key not in cache:
                cache[key] = noise_power_mp(ch.bath, y) / 2
            return cache[key]

        Am = [[mpmath.mpc(complex(A[i, j]).real, complex(A[i, j]).imag) for j in range(dim)]
              for i in range(dim)]
        for r, (k, l) in enumerate(pairs):
            for c, (kp, lp) in enumerate(pairs):
                v = Am[lp][l] * Am[k][kp] * (g(w + E[lp] - E[k]) + g(-w - E[l] + E[kp]))
                if l == lp:
                    v -= mpmath.fsum(Am[k][j] * Am[j][kp] * g(w + E[l] - E[j])
                                     for j in range(dim) if Am[k][j] and Am[j][kp])
                if k == kp:
                    v -= mpmath.fsum(Am[lp][j] * Am[j][l] * g(-w - E[j] + E[k])
                                     for j in range(dim) if Am[lp][j] and Am[j][l])
                out[r, c] += v
    return out


def population_rates(rt: RateTensor, dim: int) -> np.ndarray:
    """Matrix gamma_{kk,ll}(i0+) over eigenstates (rate from l to k off the diagonal)."""
    idx = {pr: i for i, pr in enumerate(rt.pairs)}
    d = np.array([idx[(k, k)] for k in range(dim)])
    return np.real(rt.entries[np.ix_(d, d)])


def upsilon_matrix(rt: RateTensor, energies: np.ndarray, T: float,
                   reference: float | None = None) -> np.ndarray:
    """Upsilon_kl = gamma_{kk,ll}(i0+) exp(-(E_l - reference)/T).

    ``reference`` defaults to the lowest energy; it rescales every entry by the
    same positive constant and keeps the exponentials finite.
    """
    if T <= 0:
        raise ValueError("Upsilon needs T > 0")
    if rt.p_index != 0:
        raise ValueError("Upsilon is built from the p = 0 block")
    ref = energies.min() if reference is None else reference
    G = population_rates(rt, len(energies))
    return G * np.exp(-(energies[None, :] - ref) / T)
