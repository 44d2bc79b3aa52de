"""Break a clean disk map on purpose, then let the repair stage fix it.

Run with ``python3 demos/fold_repair.py``.
"""

import warnings

import numpy as np

from sdmce.disk_energy import PenaltyState
from sdmce.fixtures import hemisphere
from sdmce.metrics import angle_errors
from sdmce.pipeline import Parameterizer
from sdmce.unfolding import classify_folding, foreign_vertex_hits, repair_all

mesh = hemisphere(16)
solver = Parameterizer(mesh)
clean = solver.run(mu=10.0, repair=False)
f = clean.embedding.f.copy()
loop = mesh.boundary_loop
n = len(loop)

# swap two neighbouring boundary points: a folded boundary pair
f[[loop[5], loop[6]]] = f[[loop[6], loop[5]]]
# reflect an interior vertex across the opposite edge of one of its faces
p, a, b = mesh.faces[0]
edge = f[b] - f[a]
foot = f[a] + np.dot(f[p] - f[a], edge) / np.dot(edge, edge) * edge
f[p] = foot + 0.2 * (foot - f[p])

print("before:", classify_folding(mesh, f).totals())
with warnings.catch_warnings():
    warnings.simplefilter("ignore")  # flipped faces warn in the angle metric
    emb, history = repair_all(mesh, f, PenaltyState(10.0), solver.resolver(10.0))
for k, rep in enumerate(history):
    print(f"  sweep {k}: {rep.totals()}")
print("after: clean =", classify_folding(mesh, emb.f).is_clean,
      "| foreign vertices inside faces:", len(foreign_vertex_hits(mesh, emb.f)))
print(f"mean angle error: clean solve {clean.report.angle_error_mean:.5f}, "
      f"repaired {angle_errors(mesh, emb.f).mean:.5f}")
