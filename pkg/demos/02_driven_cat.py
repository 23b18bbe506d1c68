"""
A driven chain relaxing into a cat state
========================================

A weak resonant field on the last site couples the one-interface levels a and
c-. With a cold bath this pumps population out of the Pi = +1 set and the
steady state approaches the Schroedinger cat Scs-.
"""

from dataclasses import replace

import numpy as np

from isingcat import build_eigenstructure, build_partition, config
from isingcat.analysis import entanglement_witness
from isingcat.solver import build_blocks, solve_driven_perturbative

cfg = config.parse(config.preset("cat"), mode="driven-perturbative")
es = build_eigenstructure(cfg.chain)
omega = cfg.coupling.omega(cfg.chain)
print(f"drive frequency {omega:.3f} (= 2 h2), bath temperature {cfg.bath.temperature}")

part = build_partition(es, cfg.bath.temperature)
blocks = build_blocks(part, cfg.coupling, cfg.bath)
rates, sh = solve_driven_perturbative(blocks, part)
rho = sh.steady
scs = es.named["scs-"]
print(f"fidelity with Scs- : {scs @ rho @ scs:.5f}")
s_sub, s_tot, ent = entanglement_witness(rho, [1, 2])
print(f"half-chain entropy {s_sub:.4f} > total entropy {s_tot:.4f}: {ent}")

# The ratio of the two sector populations follows exp(-omega/T)
print("\n  T        p+/p-        exp(-w/T)")
for k in (2, 4, 8):
    T = omega / k
    part = build_partition(es, T)
    blocks = build_blocks(part, cfg.coupling, replace(cfg.bath, temperature=T))
    _, sh = solve_driven_perturbative(blocks, part)
    p = sh.sector_populations
    print(f"  {T:.4f}  {p[part.set_of('scs+')] / p[part.set_of('scs-')]:.4e}  {np.exp(-k):.4e}")
