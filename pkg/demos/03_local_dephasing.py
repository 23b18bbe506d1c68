"""
Why the full solve loses the cat
================================

The full Floquet solve keeps every local bath channel. A local sigma^z term
maps Scs- onto Scs+ at zero frequency, so an Ohmic bath dephases the ground
doublet at a rate of order eps^2 W(0) = eps^2 2 pi eta T. The pumping that
builds the cat is suppressed by exp(-(E_a - E_0)/T), here about e^-56, so the
dephasing wins and the steady state is an equal mixture of |up> and |down>.
Dropping the sigma^z channels restores the cat.
"""

from dataclasses import replace

import numpy as np

from isingcat import build_eigenstructure, build_partition, config
from isingcat.bath import noise_power
from isingcat.solver import build_blocks, solve_driven_direct

cfg = config.parse(config.preset("cat"))
es = build_eigenstructure(cfg.chain)
part = build_partition(es, cfg.bath.temperature)
scs = es.named["scs-"]
T = cfg.bath.temperature

dephasing = cfg.coupling.eps_local ** 2 * float(noise_power(cfg.bath, 1e-12))
pumping = np.exp(-1.4 / T)
print(f"eps^2 W(0) = {dephasing:.2e}   exp(-(E_a - E_0)/T) = {pumping:.2e}")

for axes in ("xyz", "xy"):
    c = replace(cfg.coupling, local_axes=axes)
    sh = solve_driven_direct(build_blocks(part, c, cfg.bath), dps=cfg.solver["dps"])
    rho = np.real(sh.steady)
    print(f"local axes {axes:>3}: fidelity with Scs- {scs @ rho @ scs:.5f}, "
          f"p_up {rho[15, 15]:.4f}, p_down {rho[0, 0]:.4f}")
