"""Extrapolate the blow-up factor b* to eps -> 0 and evaluate the
blow-up predicate for a few boundary data.

vertical_shear has zero tangential gradient at P, so the verdict rests on
b*.  The rotation preset is a rigid field: the exact solution is u = phi
and the gap gradient stays put, yet the predicate (which only reads the
translation loads) still answers True.  The last column makes that visible.

Run:  python demos/04_blowup_factor.py
"""
from dataclasses import replace

import numpy as np

from lamegap.asymptotics import (SweepParams, blow_up_predicate,
                                 estimate_bstar, run_sweep)
from lamegap.geometry import BoundaryData
from lamegap.mesh import GradingSpec

params = SweepParams(grading=GradingSpec(n_layers=6, far_h=0.2),
                     segment_points=8, oracle=False)
eps = [0.04, 0.02, 0.01, 0.005]

for name in ("vertical_shear", "rotation", "horizontal_shift"):
    phi = BoundaryData.preset(name)
    res = run_sweep(replace(params, phi=phi), eps, jobs=2)
    B = np.array([r["b"] for r in res.records])
    est = estimate_bstar((res.eps, B), d=2)
    # zero tests at three standard errors of the extrapolation
    tol = np.maximum(3 * est.uncertainty, 1e-12)
    pred = blow_up_predicate(2, est.b_star, phi.grad_at_P, tol=tol,
                             grad_tol=1e-12)
    print(f"{name:>16}: b* = {np.round(est.b_star, 4)}"
          f"  +- {np.round(est.uncertainty, 4)}")
    print(f"{'':>16}  blow-up expected: {pred.expected}"
          f"  (condition {pred.condition}, k0={pred.k0})")
    g = res.column("max_grad_segment")
    print(f"{'':>16}  max|grad u| on the segment: {g[0]:.3f} -> {g[-1]:.3f}")
