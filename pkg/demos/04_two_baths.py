"""
Two baths at different temperatures
===================================

A second, colder bath coupled through a local operator on the first site
favours Scs+ once its rates dominate. For two sites per half the relevant
rates are of the same size and the populations stay mixed; from three sites
per half on the cat appears.
"""

from isingcat import ChainSpec, build_eigenstructure, build_partition
from isingcat.bath import BathSpec, CouplingSpec
from isingcat.solver import solve_two_bath

T = 0.2 / 20
for h in ((0.2, 0.1), (0.2, 0.1, 0.05)):
    es = build_eigenstructure(ChainSpec(len(h), 1.0, h))
    part = build_partition(es, T)
    rates, sh = solve_two_bath(part, CouplingSpec(0.1, eps_bath2=0.01),
                               BathSpec(T), BathSpec(T / 100))
    scs = es.named["scs+"]
    print(f"N = {len(h)}: fidelity with Scs+ {scs @ sh.steady @ scs:.8f}, "
          f"sector populations {sh.sector_populations.round(6).tolist()}")
