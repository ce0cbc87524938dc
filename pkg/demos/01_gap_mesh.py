"""Build the graded mesh of the thin gap and look at it.

Run:  python demos/01_gap_mesh.py [eps]
Writes mesh_gap.svg (zoom on the gap) and mesh.vtk to demos/out/.
"""
import os
import sys

import numpy as np

from lamegap import io
from lamegap.geometry import disk_configuration, gap_width
from lamegap.mesh import GradingSpec, build_gap_mesh, gap_layers, mesh_quality

eps = float(sys.argv[1]) if len(sys.argv) > 1 else 0.01
out = os.path.join(os.path.dirname(__file__), "out")

geom = disk_configuration(1.0, 0.3, eps)
print(f"eps={eps}  window R={geom.R:.3f}  closest points P={geom.P}")

mesh = build_gap_mesh(geom, GradingSpec(n_layers=8))
q = mesh_quality(mesh)
print(f"{mesh.n_cells} cells, {mesh.n_nodes} nodes")
print(f"min angle {q['min_angle']:.1f} deg, max aspect {q['max_aspect']:.2f}")

# the gap is resolved by the same number of layers wherever we look
xs = np.minimum(np.array([0.0, 0.3, 1.0, 2.0]) * np.sqrt(eps), geom.R)
for x, n, w in zip(xs, gap_layers(mesh, xs), gap_width(geom, xs)):
    print(f"  x'={x:+.4f}  gap width {w:.5f}  triangles crossed {n}")

w = 6 * np.sqrt(eps)
io.svg_mesh(os.path.join(out, "mesh_gap.svg"), mesh,
            window=(-w, w, geom.P[1] - 0.2 * w, geom.P[1] + 0.6 * w))
io.write_vtk(os.path.join(out, "mesh.vtk"), mesh)
print("wrote", out)
