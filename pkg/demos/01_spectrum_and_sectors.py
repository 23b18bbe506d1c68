"""
Spectrum and symmetry sectors of a four-site chain
==================================================

Builds the eigenstructure of the ferromagnetic chain with opposite fields on
the two halves, then splits it into the sets that the collective S_x bath
coupling cannot connect.
"""

import numpy as np

from isingcat import ChainSpec, build_eigenstructure, build_partition
from isingcat.checks import special_dfs_state

# J = 1, fields h1 = 0.2 (outer sites), h2 = 0.1 (inner sites)
spec = ChainSpec(2, 1.0, (0.2, 0.1))
es = build_eigenstructure(spec)

print("lowest levels (energy, degeneracy, Pi labels)")
for lv in es.levels[:6]:
    print(f"  {lv.energy:+.3f}  x{lv.vectors.shape[1]}  {list(lv.parities)}")

# The ground doublet |up>, |down> splits into Scs- and Scs+, which sit in
# different sets because S_x never changes the Pi eigenvalue.
part = build_partition(es, 0.1)
print("\nsets under uniform coupling:", part.n_sets)
for q, s in enumerate(part.sets):
    print(f"  set {q}: Pi = {part.pi_label[q]:+d}, {len(s)} states")
print("Scs- in set", part.set_of("scs-"), " Scs+ in set", part.set_of("scs+"))

# Switching off the inner field creates one extra state that S_x cannot reach.
special = build_partition(build_eigenstructure(ChainSpec(2, 1.0, (0.2, 0.0))), 0.1)
lone = [s for s in special.sets if len(s) == 1][0][0]
overlap = abs(special.vectors[:, lone] @ special_dfs_state())
print(f"\nh2 = 0: {special.n_sets} sets, isolated state overlap with the closed form {overlap:.12f}")

# Sector Gibbs weights at this temperature
w = part.z_q / part.z_q.sum()
print("sector weights", np.round(w, 6))
