"""Time-domain integration of the driven Redfield equation.

The generator is the full (non-secular) Redfield tensor of every bath channel
plus a classical drive eps_f (Lam e^{iwt} + Lam^dag e^{-iwt}). The one-period
propagator is integrated once with an adaptive Runge-Kutta scheme; the
stroboscopic sequence is then generated by repeated squaring, so run lengths
grow as 2^k periods.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as sint
from scipy import linalg

from .bath import BathSpec, CouplingSpec, coupling_channels, half_rate, lamb_shift, noise_power
from .chain import pi_matrix
from .solver import drive_operator

POSITIVITY_TOL = 1e-6


class NoConvergence(RuntimeError):
    def __init__(self, msg: str, residual: float):
        super().__init__(msg)
        self.residual = residual


class PositivityLoss(RuntimeError):
    """An emitted state has an eigenvalue below -1e-6."""


@dataclass(frozen=True)
class EvolutionJob:
    initial: np.ndarray               # configuration basis
    t_step: float
    period: float
    max_periods: int = 10 ** 6
    convergence_tol: float = 1e-7
    rtol: float = 1e-8
    atol: float = 1e-10
    method: str = "DOP853"

    def __post_init__(self):
        n = self.period / self.t_step
        if self.t_step <= 0 or abs(n - round(n)) > 1e-9 * n:
            raise ValueError("t_step must divide the period into an integer number of steps")

    @property
    def substeps(self) -> int:
        return int(round(self.period / self.t_step))


@dataclass
class Generator:
    """Superoperators on row-major vec(rho) in the eigenbasis ``vectors``."""
    static: np.ndarray                # -i[H, .] + Redfield dissipator
    plus: np.ndarray                  # -i[Lam, .], multiplies eps_f e^{iwt}
    minus: np.ndarray                 # -i[Lam^dag, .], multiplies eps_f e^{-iwt}
    omega: float
    eps_drive: float
    vectors: np.ndarray
    energies: np.ndarray

    def at(self, t: float) -> np.ndarray:
        if not self.eps_drive:
            return self.static
        ph = np.exp(1j * self.omega * t)
        return self.static + self.eps_drive * (ph * self.plus + np.conj(ph) * self.minus)


def _left(a):
    return np.kron(a, np.eye(len(a)))


def _right(b):
    return np.kron(np.eye(len(b)), b.T)


def redfield_superoperator(basis, coupling: CouplingSpec, bath: BathSpec,
                           second_bath: BathSpec | None = None) -> Generator:
    """Full Redfield generator with gamma evaluated at w_{k'l'} for every pair."""
    E = basis.energies
    n = len(E)
    H = np.diag(E).astype(complex)
    L = -1j * (_left(H) - _right(H))
    dE = E[None, :] - E[:, None]                         # [k, k'] = E_k' - E_k
    for ch in coupling_channels(basis, coupling, bath, second_bath):
        A = ch.op
        X = A * half_rate(ch.bath, dE)
        Xd = X.conj().T
        L += (np.kron(X, A.T) + np.kron(A, Xd.T)
              - _left(A @ X) - _right(Xd @ A))
    V = basis.vectors
    lam = V.conj().T @ drive_operator(coupling, basis.spec.n_half) @ V
    lamd = lam.conj().T
    plus = -1j * (_left(lam) - _right(lam))
    minus = -1j * (_left(lamd) - _right(lamd))
    omega = coupling.omega(basis.spec) if coupling.eps_drive else 0.0
    return Generator(L, plus, minus, omega, coupling.eps_drive, V, E)


def one_period_propagator(gen: Generator, job: EvolutionJob) -> np.ndarray:
    m = gen.static.shape[0]

    def rhs(t, y):
        return (gen.at(t) @ y.reshape(m, m)).ravel()

    sol = sint.solve_ivp(rhs, (0.0, job.period), np.eye(m, dtype=complex).ravel(),
                         method=job.method, rtol=job.rtol, atol=job.atol,
                         max_step=job.t_step)
    if not sol.success:
        raise RuntimeError(sol.message)
    return sol.y[:, -1].reshape(m, m)


def period_average(gen: Generator, rho: np.ndarray, job: EvolutionJob) -> np.ndarray:
    """(1/period) int_0^period rho(t) dt starting from the stroboscopic state."""
    m = gen.static.shape[0]

    def rhs(t, y):
        r = y[:m]
        return np.concatenate([gen.at(t) @ r, r])

    y0 = np.concatenate([rho.ravel(), np.zeros(m, complex)])
    sol = sint.solve_ivp(rhs, (0.0, job.period), y0, method=job.method,
                         rtol=job.rtol, atol=job.atol, max_step=job.t_step)
    n = int(math.isqrt(m))
    return sol.y[m:, -1].reshape(n, n) / job.period


def _record(t, rho_cfg, named, pim):
    ev = np.linalg.eigvalsh(rho_cfg)
    return {
        "t": t,
        "fidelity_scs-": float(np.real(named["scs-"] @ rho_cfg @ named["scs-"])),
        "fidelity_scs+": float(np.real(named["scs+"] @ rho_cfg @ named["scs+"])),
        "parity": float(np.real(np.trace(pim @ rho_cfg))),
        "purity": float(np.real(np.trace(rho_cfg @ rho_cfg))),
        "min_eig": float(ev[0]),
        "trace": float(np.real(np.trace(rho_cfg))),
    }


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    d = a - b
    return 0.5 * float(np.abs(np.linalg.eigvalsh(0.5 * (d + d.conj().T))).sum())


def integrate(job: EvolutionJob, basis, gen: Generator, coupling: CouplingSpec | None = None):
    """Evolve to the stroboscopic steady state.

    Returns (period-averaged state, history, info). States are in the
    configuration basis. ``coupling`` is accepted for symmetry with the
    solver entry points; the generator already carries it.
    """
    V = gen.vectors
    n = len(gen.energies)
    named = basis.named
    pim = pi_matrix(basis.spec.n_sites)
    to_cfg = lambda r: V @ r @ V.conj().T
    rho = V.conj().T @ np.asarray(job.initial, complex) @ V

    U = one_period_propagator(gen, job)
    spectrum = relaxation_spectrum(U, job)
    pin = conserved_projector(U, spectrum["conserved_modes"])
    U = pin(U)
    samples = [rho]
    hist = [_record(0.0, to_cfg(rho), named, pim)]
    stride, elapsed = 1, 0
    prev = rho
    residual = math.inf
    while elapsed + stride <= job.max_periods:
        r = (U @ prev.ravel()).reshape(n, n)
        elapsed += stride
        tr = np.trace(r)
        r = r / tr
        rec = _record(elapsed * job.period, to_cfg(r), named, pim)
        rec["trace_before_norm"] = float(np.real(tr))
        hist.append(rec)
        samples.append(r)
        if rec["min_eig"] < -POSITIVITY_TOL:
            raise PositivityLoss(f"min eigenvalue {rec['min_eig']:.3g} after {elapsed} periods")
        residual = trace_distance(r, prev)
        prev = r
        if residual < job.convergence_tol and elapsed >= spectrum["min_periods"]:
            break
        # each pass doubles the stride between samples
        U = pin(U @ U)
        stride *= 2
    else:
        raise NoConvergence(f"no convergence within {job.max_periods} periods", residual)

    for rec, s in zip(hist, samples):
        rec["distance_to_final"] = trace_distance(s, prev)
    avg = period_average(gen, prev, job)
    avg = avg / np.trace(avg)
    final = to_cfg(avg)
    herm = float(np.abs(final - final.conj().T).max())
    final = 0.5 * (final + final.conj().T)
    if np.linalg.eigvalsh(final)[0] < -POSITIVITY_TOL:
        raise PositivityLoss("period-averaged state is not positive")
    strobe = to_cfg(prev)
    info = {"periods": elapsed, "residual": residual, **spectrum,
            "stroboscopic": 0.5 * (strobe + strobe.conj().T),
            "hermiticity": herm,
            "propagator_trace_error": float(np.abs(_trace_row(n) @ U - _trace_row(n)).max())}
    return final, hist, info


def relaxation_spectrum(U: np.ndarray, job: EvolutionJob) -> dict:
    """Split the one-period map into decaying and numerically conserved modes.

    A mode is conserved when it cannot shrink below ``convergence_tol`` within
    ``max_periods``. The run length needed for every decaying mode to fall
    below the tolerance is returned as ``min_periods``. Counting on successive
    samples alone would stop early whenever a slow mode has barely started
    to move.
    """
    lam = np.abs(np.linalg.eigvals(U))
    rate = -np.log(np.clip(lam, 1e-300, None))
    need = np.log(1.0 / job.convergence_tol)
    decaying = rate * job.max_periods > need
    slowest = float(rate[decaying].min()) if decaying.any() else math.inf
    min_periods = int(math.ceil(need / slowest)) if decaying.any() else 1
    return {"conserved_modes": int((~decaying).sum()),
            "conserved_threshold": float(need / job.max_periods),
            "slowest_rate_per_period": slowest,
            "min_periods": min(min_periods, job.max_periods)}


def conserved_projector(U: np.ndarray, m: int):
    """Return a map that pins the m slowest modes of U to eigenvalue exactly 1.

    Integration error leaves those eigenvalues off 1 by ~1e-14; repeated
    squaring would turn that into secular drift. The invariant subspaces come
    from ordered Schur forms, which stay well conditioned when the conserved
    eigenvalues are nearly degenerate.
    """
    if m == 0:
        return lambda X: X
    k = len(U)
    order = np.argsort(-np.abs(np.linalg.eigvals(U)))
    cut = 0.5 * (abs(np.linalg.eigvals(U)[order[m - 1]]) + abs(np.linalg.eigvals(U)[order[m]])) \
        if m < k else 0.0
    sel = lambda z: abs(z) > cut
    _, Qr, sr = linalg.schur(U, output="complex", sort=sel)
    _, Ql, sl = linalg.schur(U.conj().T, output="complex", sort=sel)
    if sr != m or sl != m:
        raise RuntimeError("could not isolate the conserved subspace")
    R = Qr[:, :m]
    L = Ql[:, :m].conj().T
    L = np.linalg.solve(L @ R, L)                 # biorthogonal: L R = 1

    def pin(X):
        B = L @ X @ R
        return X - R @ (B - np.eye(m)) @ L

    return pin


def _trace_row(n):
    return np.eye(n).ravel()


# ---------------------------------------------------------------------------
# single two-level system: optical Bloch equations

def bloch_steady(gamma: float, theta: float, eps_f: float) -> dict:
    """Three-equation steady state of the resonantly driven, RWA Bloch system.

    Unknowns: excited population u, coherence x = u^(-1)_{+-}, y = x*.
    Levels: |+> is the ground state (energy -h), |-> the excited one.
    """
    a = gamma / 2 + 1j * theta
    # rows: gamma u + i e (x - y) = 0 ; -a x + i e (1 - 2u) = 0 ; -conj(a) y - i e (1 - 2u) = 0
    M = np.array([[gamma, 1j * eps_f, -1j * eps_f],
                  [-2j * eps_f, -a, 0],
                  [2j * eps_f, 0, -np.conj(a)]], dtype=complex)
    rhs = np.array([0, -1j * eps_f, 1j * eps_f], dtype=complex)
    u, x, y = np.linalg.solve(M, rhs)
    return {"excited": float(np.real(u)), "coherence": complex(x),
            "rho": np.array([[1 - np.real(u), x], [np.conj(x), np.real(u)]])}


def bloch_integrate(gamma: float, theta: float, eps_f: float, h: float,
                    tol: float = 1e-12, max_periods: int = 200_000,
                    rtol: float = 1e-11, atol: float = 1e-13) -> dict:
    """Lab-frame RWA Bloch equations integrated to their periodic steady state.

    r_mm = excited population, r_pm = <+|rho|->, which oscillates as e^{iwt}.
    The co-rotating drive terms are kept and the stroboscopic sequence is
    followed by repeated squaring of the (affine) one-period map.
    """
    w = 2 * h

    def rhs(t, y):
        rmm, rpm = y[0], y[1]
        rmp = np.conj(rpm)
        ph = np.exp(1j * w * t)
        d_rmm = -gamma * rmm + 1j * eps_f * (ph * rmp - np.conj(ph) * rpm)
        d_rpm = (1j * w - gamma / 2 - 1j * theta) * rpm + 1j * eps_f * ph * (1 - 2 * rmm)
        return np.array([d_rmm, d_rpm])

    period = 2 * np.pi / w

    def flow(y0):
        s = sint.solve_ivp(rhs, (0, period), y0, method="DOP853", rtol=rtol, atol=atol)
        return s.y[:, -1]

    # the map over one period is affine in (Re rmm, Re rpm, Im rpm)
    def real_flow(v):
        out = flow(np.array([v[0], v[1] + 1j * v[2]], complex))
        return np.array([out[0].real, out[1].real, out[1].imag])

    c = real_flow(np.zeros(3))
    A = np.column_stack([real_flow(e) - c for e in np.eye(3)])
    state = np.zeros(3)
    k, stride, elapsed, res = A, 1, 0, math.inf
    off = c
    # x_{2n} = A^n x_n + (A^{n-1} + ... + 1) c, doubled each pass
    while elapsed + stride <= max_periods:
        nxt = k @ state + off
        elapsed += stride
        res = float(np.abs(nxt - state).max())
        state = nxt
        if res < tol:
            break
        off = k @ off + off
        k = k @ k
        stride *= 2
    else:
        raise NoConvergence("Bloch integration did not converge", res)
    return {"excited": float(state[0]), "coherence": complex(state[1], state[2]),
            "periods": elapsed, "residual": res}


def single_tls_bloch(h: float, eps_drive: float, bath: BathSpec, tol: float = 1e-6) -> dict:
    """Steady state of one resonantly driven TLS at T = 0, two ways."""
    if bath.temperature != 0:
        raise ValueError("the Bloch check uses a zero-temperature bath")
    gamma = float(noise_power(bath, 2 * h))
    theta = 0.0
    if bath.include_shifts:
        theta = float(lamb_shift(bath, -2 * h) - lamb_shift(bath, 2 * h))
    alg = bloch_steady(gamma, theta, eps_drive)
    num = bloch_integrate(gamma, theta, eps_drive, h)
    diff = abs(alg["excited"] - num["excited"])
    if diff > tol:
        raise AssertionError(f"Bloch paths disagree by {diff:.3g}")
    return {"gamma": gamma, "theta": theta, "algebraic": alg, "integrated": num,
            "difference": diff, "rho": alg["rho"]}


def bloch_grid(h: float, eps_values, gamma_values, theta: float = 0.0,
               tol: float = 1e-12) -> list[dict]:
    """Algebraic against integrated Bloch steady states over a (eps_f, gamma) grid."""
    out = []
    for ef in eps_values:
        for g in gamma_values:
            alg = bloch_steady(g, theta, ef)
            num = bloch_integrate(g, theta, ef, h, tol=tol)
            out.append({"eps_f": float(ef), "gamma": float(g),
                        "excited_algebraic": alg["excited"],
                        "excited_integrated": num["excited"],
                        "textbook": ef ** 2 / (g ** 2 / 4 + theta ** 2 + 2 * ef ** 2),
                        "difference": max(abs(alg["excited"] - num["excited"]),
                                          abs(alg["coherence"] - num["coherence"])),
                        "periods": num["periods"]})
    return out
