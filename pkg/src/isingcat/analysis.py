"""State metrics: cat parameter, fidelities, entropies and the entropy
entanglement witness.

States are dense density matrices in the configuration basis unless noted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

VALID_TOL = 1e-9
WITNESS_MARGIN = 1e-9


class InvalidState(ValueError):
    """Density matrix fails the trace, Hermiticity or positivity checks."""


@dataclass(frozen=True)
class Validity:
    trace_error: float
    hermiticity_error: float
    min_eigenvalue: float

    @property
    def ok(self) -> bool:
        return (self.trace_error < VALID_TOL and self.hermiticity_error < VALID_TOL
                and self.min_eigenvalue >= -VALID_TOL)


def validity(rho: np.ndarray) -> Validity:
    rho = np.asarray(rho)
    herm = float(np.max(np.abs(rho - rho.conj().T))) if rho.size else 0.0
    ev = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    return Validity(abs(complex(np.trace(rho)) - 1.0), herm, float(ev.min()))


def check_state(rho: np.ndarray) -> np.ndarray:
    v = validity(rho)
    if not v.ok:
        raise InvalidState(
            f"trace error {v.trace_error:.2e}, hermiticity error "
            f"{v.hermiticity_error:.2e}, min eigenvalue {v.min_eigenvalue:.2e}")
    return rho


def n_sites_of(rho: np.ndarray) -> int:
    dim = rho.shape[0]
    n = int(round(np.log2(dim)))
    if 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def _doublet(n_sites: int):
    dim = 1 << n_sites
    return 0, dim - 1     # |-...-> and |+...+>


def cat_parameter(rho: np.ndarray) -> tuple[float, float]:
    """Return ``(p, support)``.

    p = 1/2 - Re<up|rho|down>, so the pure Scs- state gives 1 and Scs+ gives 0.
    ``support`` is the population of the ground doublet, the weight for which
    p is meaningful.
    """
    down, up = _doublet(n_sites_of(rho))
    p = 0.5 - float(np.real(rho[up, down]))
    support = float(np.real(rho[up, up] + rho[down, down]))
    return p, support


def fidelity_with(rho: np.ndarray, target: np.ndarray) -> float:
    """<target|rho|target> for a normalised pure target."""
    t = np.asarray(target, dtype=complex)
    if t.shape[0] != rho.shape[0]:
        raise ValueError("dimension mismatch")
    return float(np.real(t.conj() @ rho @ t))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    d = a - b
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((d + d.conj().T) / 2))))


def partial_trace(rho: np.ndarray, keep) -> np.ndarray:
    """Reduced state on the 1-based sites in ``keep``.

    Site n is bit n-1 of the configuration index; the output keeps the same
    convention with the retained sites renumbered in increasing order.
    """
    n = n_sites_of(rho)
    keep = sorted(set(int(s) for s in keep))
    if not keep or keep[0] < 1 or keep[-1] > n:
        raise ValueError(f"sites must lie in 1..{n}")
    # C-order reshape puts site n at axis n_sites - n
    t = np.asarray(rho).reshape((2,) * (2 * n))
    ax_keep = [n - s for s in sorted(keep, reverse=True)]
    ax_drop = [a for a in range(n) if a not in ax_keep]
    perm = ax_keep + ax_drop + [a + n for a in ax_keep] + [a + n for a in ax_drop]
    k, d = 1 << len(ax_keep), 1 << len(ax_drop)
    t = t.transpose(perm).reshape(k, d, k, d)
    return np.einsum("ajbj->ab", t)


def von_neumann_entropy(rho: np.ndarray) -> float:
    ev = np.clip(np.linalg.eigvalsh((rho + rho.conj().T) / 2), 0.0, 1.0)
    ev = ev[ev > 0]
    return float(-np.sum(ev * np.log(ev)))


def entanglement_witness(rho: np.ndarray, subset) -> tuple[float, float, bool]:
    """``(S_sub, S_total, S_sub > S_total + margin)``.

    A reduced entropy above the total entropy cannot occur for a separable
    state across the cut, so True certifies entanglement.
    """
    n = n_sites_of(rho)
    subset = set(int(s) for s in subset)
    if not subset or len(subset) >= n:
        raise ValueError("subset must be a nonempty proper subset of the sites")
    s_sub = von_neumann_entropy(partial_trace(rho, subset))
    s_tot = von_neumann_entropy(rho)
    return s_sub, s_tot, bool(s_sub > s_tot + WITNESS_MARGIN)


def cat_mixture(p: float, n_sites: int) -> np.ndarray:
    """p|Scs-><Scs-| + (1-p)|Scs+><Scs+|."""
    dim = 1 << n_sites
    down, up = _doublet(n_sites)
    rho = np.zeros((dim, dim))
    rho[up, up] = rho[down, down] = 0.5
    rho[up, down] = rho[down, up] = 0.5 - p
    return rho


def state_metrics(rho: np.ndarray, named: dict | None = None) -> dict:
    """Summary used by the CLI result files."""
    n = n_sites_of(rho)
    p, support = cat_parameter(rho)
    v = validity(rho)
    s_sub, s_tot, ent = entanglement_witness(rho, range(1, n // 2 + 1))
    out = {
        "cat_parameter": p,
        "doublet_support": support,
        "entropy_half_chain": s_sub,
        "entropy_total": s_tot,
        "entangled_by_witness": ent,
        "trace_error": v.trace_error,
        "hermiticity_error": v.hermiticity_error,
        "min_eigenvalue": v.min_eigenvalue,
    }
    if named:
        out["fidelity"] = {k: fidelity_with(rho, vec) for k, vec in named.items()}
    return out
