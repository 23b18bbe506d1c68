"""
Checking the solvers against direct time evolution
==================================================

A single driven two-level system is solved both from its three steady-state
equations and by integrating the master equation. The chain at moderate
temperature is then evolved from |up> and compared with the Gibbs state.
"""

import time

import numpy as np

from isingcat import build_eigenstructure, build_partition, config, oracle
from isingcat.analysis import trace_distance
from isingcat.solver import gibbs_state

for g in oracle.bloch_grid(0.1, [0.002, 0.01], [0.02, 0.08]):
    print(f"eps_f {g['eps_f']:.3f} gamma {g['gamma']:.3f}: excited "
          f"{g['excited_algebraic']:.6e} vs {g['excited_integrated']:.6e}")

cfg = config.parse(config.preset("thermal"))
es = build_eigenstructure(cfg.chain)
part = build_partition(es, cfg.bath.temperature)
gen = oracle.redfield_superoperator(part, cfg.coupling, cfg.bath)
oc = cfg.oracle
v = es.named["up"]
job = oracle.EvolutionJob(np.outer(v, v), t_step=oc["period"] / oc["steps_per_period"],
                          period=oc["period"], max_periods=oc["max_periods"],
                          convergence_tol=oc["tol"], rtol=oc["rtol"], atol=oc["atol"])
t0 = time.perf_counter()
rho, hist, info = oracle.integrate(job, part, gen)
print(f"\nthermal run: {info['periods']} periods in {time.perf_counter() - t0:.1f} s, "
      f"distance to Gibbs {trace_distance(rho, gibbs_state(es, cfg.bath.temperature)):.2e}")
