"""Flatten a hemisphere onto the unit disk and watch mu being tuned.

Run with ``python3 demos/hemisphere_walkthrough.py [rings]``.  Writes
``hemisphere.obj`` (with vt lines), ``hemisphere.svg`` and a JSON report into
the current directory.
"""

import sys

from sdmce.fixtures import hemisphere
from sdmce.mesh_io import write_parameterized
from sdmce.pipeline import parameterize
from sdmce.svg import render_svg

rings = int(sys.argv[1]) if len(sys.argv) > 1 else 12
mesh = hemisphere(rings)
print(f"hemisphere: {mesh.n_vertices} vertices, {mesh.n_faces} faces, "
      f"{len(mesh.boundary_loop)} on the boundary")

result = parameterize(mesh)  # mu="auto", equal-angle start

# every probe the tuner ran, in order
for p in result.tune.history:
    print(f"  {p.phase:<12} mu={p.mu:<8g} E_Cd={p.energy:+.3e}  "
          f"pi-A={p.area_deviation:+.3e}  angle err={p.angle_error:.4f}")
print(f"chosen mu = {result.mu:g}")

rep = result.report
print(f"E_Cd {rep.E_Cd:.3e}, mean angle error {rep.angle_error_mean:.4f}, "
      f"folded faces {rep.folding['totals']['triangles']}")
print("timings:", {k: round(v, 3) for k, v in result.timings.items()})

write_parameterized(mesh, result.embedding.f, "hemisphere.obj")
with open("hemisphere.svg", "w", encoding="utf-8") as fh:
    fh.write(render_svg(mesh, result.embedding))
with open("hemisphere.json", "w", encoding="utf-8") as fh:
    fh.write(rep.to_json())
