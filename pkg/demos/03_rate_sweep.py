"""Sweep eps, fit the blow-up rate of the gap gradient and of the Gram
diagonal.  Expect slopes near -1/2 in two dimensions.

Run:  python demos/03_rate_sweep.py [jobs]
"""
import os
import sys

from lamegap import io
from lamegap.asymptotics import run_sweep
from lamegap.config import load_config

jobs = int(sys.argv[1]) if len(sys.argv) > 1 else 2
root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
cfg = load_config(os.path.join(root, "configs", "reference.toml"))

res = run_sweep(cfg.sweep_params(), cfg.sweep.eps, jobs=jobs)
print(f"{'eps':>8} {'max|grad u|':>12} {'a_11':>9} {'a_22':>9} {'C_2':>9}")
for r in res.rows:
    print(f"{r['eps']:8.4f} {r['max_grad_segment']:12.4f} {r['a_11']:9.3f} "
          f"{r['a_22']:9.3f} {r['C_2']:9.5f}")

out = os.path.join(os.path.dirname(__file__), "out")
for q in ("max_grad_segment", "a_11", "a_22"):
    fit = res.fit(q, n=cfg.sweep.fit_points)
    print(f"{q:>17}: slope {fit.slope:+.4f}  r2 {fit.r_squared:.5f}")
    io.svg_loglog(os.path.join(out, f"rate_{q}.svg"), res.eps,
                  res.column(q), fit, title=q, ylabel=q)
io.write_sweep_csv(res.rows, os.path.join(out, "sweep.csv"))
