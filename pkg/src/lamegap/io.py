"""Result persistence: sweep CSV, JSON records, legacy VTK and SVG plots."""
from __future__ import annotations

import csv
import json
import math
import os
from xml.sax.saxutils import escape

import numpy as np

from .asymptotics import CSV_COLUMNS, RateFit
from .errors import ContractError

TOOL = "lamegap"
CSV_HEADER = ",".join(CSV_COLUMNS)


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(obj, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True, default=_default)
        f.write("\n")
    return path


def read_json(path):
    with open(path) as f:
        return json.load(f)


# ---------------------------------------------------------------------------
# sweep table

def write_sweep_csv(rows, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(CSV_HEADER + "\n")
        for row in rows:
            vals = []
            for c in CSV_COLUMNS:
                v = row[c]
                vals.append(str(int(v)) if c == "cells" else repr(float(v)))
            f.write(",".join(vals) + "\n")
    return path


def read_sweep_csv(path) -> dict:
    """Columns of a sweep CSV as float arrays keyed by header name."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ContractError(f"{path} is empty") from None
        data = [row for row in reader if row]
    cols = {}
    try:
        for k, name in enumerate(header):
            cols[name] = np.array([float(r[k]) for r in data])
    except (ValueError, IndexError) as exc:
        raise ContractError(f"{path}: malformed row ({exc})") from None
    return cols


# ---------------------------------------------------------------------------
# VTK

def write_vtk(path, mesh, field=None, point_scalars=None):
    """Legacy ASCII unstructured grid.

    Without a field the straight triangles are written (cell type 5); with a
    P2 field the six-node quadratic triangles (type 22) carry the
    displacement vector and the nodal gradient magnitude.
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    if field is None:
        pts = mesh.nodes
        cells = mesh.cells
        ctype = 5
    else:
        pts = field.dofs.points
        cells = field.dofs.cell_nodes
        ctype = 22
    lines = ["# vtk DataFile Version 3.0", f"{TOOL} output", "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {len(pts)} double"]
    lines += [f"{x:.17g} {y:.17g} 0" for x, y in pts]
    npc = cells.shape[1]
    lines.append(f"CELLS {len(cells)} {len(cells) * (npc + 1)}")
    lines += [f"{npc} " + " ".join(map(str, c)) for c in cells]
    lines.append(f"CELL_TYPES {len(cells)}")
    lines += [str(ctype)] * len(cells)
    lines.append(f"CELL_DATA {len(cells)}")
    lines.append("SCALARS region int 1")
    lines.append("LOOKUP_TABLE default")
    lines += [str(int(r)) for r in mesh.cell_region]
    if field is not None:
        lines.append(f"POINT_DATA {len(pts)}")
        lines.append("VECTORS displacement double")
        lines += [f"{u:.17g} {v:.17g} 0" for u, v in field.nodal]
        gn = nodal_gradient_norm(field)
        lines.append("SCALARS grad_norm double 1")
        lines.append("LOOKUP_TABLE default")
        lines += [f"{g:.17g}" for g in gn]
        for name, vals in (point_scalars or {}).items():
            lines.append(f"SCALARS {name} double 1")
            lines.append("LOOKUP_TABLE default")
            lines += [f"{g:.17g}" for g in vals]
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    return path


def nodal_gradient_norm(field):
    """Area-weighted average over the touching cells of the gradient norm
    at each P2 node."""
    from .fem import barycentric_gradients, p2_gradients
    dofs = field.dofs
    mesh = dofs.mesh
    area, glam = barycentric_gradients(mesh.nodes[mesh.cells])
    local_bary = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1],
                           [.5, .5, 0], [0, .5, .5], [.5, 0, .5]], float)
    U = field.nodal[dofs.cell_nodes]
    acc = np.zeros(dofs.n_nodes)
    wsum = np.zeros(dofs.n_nodes)
    for k, L in enumerate(local_bary):
        G = np.einsum("cil,cik->clk", U,
                      p2_gradients(np.broadcast_to(L, (mesh.n_cells, 3)),
                                   glam))
        nrm = np.linalg.norm(G, axis=(1, 2))
        np.add.at(acc, dofs.cell_nodes[:, k], area * nrm)
        np.add.at(wsum, dofs.cell_nodes[:, k], area)
    return acc / wsum


def field_csv(path, field):
    gn = nodal_gradient_norm(field)
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        f.write("x1,x2,u1,u2,grad_norm\n")
        for (x, y), (u, v), g in zip(field.dofs.points, field.nodal, gn):
            f.write(f"{x!r},{y!r},{u!r},{v!r},{g!r}\n")
    return path


# ---------------------------------------------------------------------------
# SVG

def _nice_decades(lo, hi):
    a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    if a == b:
        b = a + 1
    return a, b


def svg_loglog(path, xs, ys, fit: RateFit | None = None, title="",
               xlabel="eps", ylabel="", width=520, height=380):
    """Standalone log-log plot with decade ticks and optional fitted line."""
    xs = np.asarray(xs, dtype=float)
    ys = np.abs(np.asarray(ys, dtype=float))
    keep = (xs > 0) & (ys > 0)
    xs, ys = xs[keep], ys[keep]
    if xs.size == 0:
        raise ContractError("nothing positive to plot")
    ml, mr, mt, mb = 70, 20, 36, 50
    xa, xb = _nice_decades(xs.min(), xs.max())
    ya, yb = _nice_decades(ys.min(), ys.max())

    def px(x):
        return ml + (math.log10(x) - xa) / (xb - xa) * (width - ml - mr)

    def py(y):
        return height - mb - (math.log10(y) - ya) / (yb - ya) * (height - mt - mb)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{ml}" y="{mt}" width="{width - ml - mr}" '
           f'height="{height - mt - mb}" fill="none" stroke="black"/>']
    for e in range(xa, xb + 1):
        x = px(10.0 ** e)
        out.append(f'<line x1="{x:.2f}" y1="{height - mb}" x2="{x:.2f}" '
                   f'y2="{height - mb + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{height - mb + 18}" font-size="11" '
                   f'text-anchor="middle">1e{e}</text>')
        for m in range(2, 10):
            if e < xb:
                xm = px(m * 10.0 ** e)
                out.append(f'<line x1="{xm:.2f}" y1="{height - mb}" '
                           f'x2="{xm:.2f}" y2="{height - mb + 3}" '
                           f'stroke="gray"/>')
    for e in range(ya, yb + 1):
        y = py(10.0 ** e)
        out.append(f'<line x1="{ml - 5}" y1="{y:.2f}" x2="{ml}" '
                   f'y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{y + 4:.2f}" font-size="11" '
                   f'text-anchor="end">1e{e}</text>')
    for x, y in zip(xs, ys):
        out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3.5" '
                   f'fill="steelblue"/>')
    if fit is not None and fit.model == "pure":
        x0, x1 = xs.min(), xs.max()
        y0 = math.exp(fit.intercept) * x0 ** fit.slope
        y1 = math.exp(fit.intercept) * x1 ** fit.slope
        out.append(f'<line x1="{px(x0):.2f}" y1="{py(y0):.2f}" '
                   f'x2="{px(x1):.2f}" y2="{py(y1):.2f}" stroke="firebrick" '
                   f'stroke-dasharray="6,3"/>')
        label = f"slope {fit.slope:.3f}, r2 {fit.r_squared:.4f}"
        out.append(f'<text x="{width - mr - 4}" y="{mt + 16}" font-size="12" '
                   f'text-anchor="end" fill="firebrick">{escape(label)}</text>')
    out.append(f'<text x="{width / 2:.1f}" y="{mt - 12}" font-size="13" '
               f'text-anchor="middle">{escape(title)}</text>')
    out.append(f'<text x="{width / 2:.1f}" y="{height - 10}" font-size="12" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{height / 2:.1f}" font-size="12" '
               f'text-anchor="middle" transform="rotate(-90 16 '
               f'{height / 2:.1f})">{escape(ylabel)}</text>')
    out.append("</svg>")
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as f:
        f.write("\n".join(out) + "\n")
    return path


def svg_mesh(path, mesh, window=None, width=600, max_cells=60000):
    """Wireframe of the mesh, optionally clipped to a bounding box
    ``(xmin, xmax, ymin, ymax)``."""
    pts = mesh.nodes
    cells = mesh.cells
    if window is not None:
        x0, x1, y0, y1 = window
        c = pts[cells].mean(1)
        sel = (c[:, 0] >= x0) & (c[:, 0] <= x1) & (c[:, 1] >= y0) & \
              (c[:, 1] <= y1)
        cells = cells[sel]
    else:
        x0, x1 = pts[:, 0].min(), pts[:, 0].max()
        y0, y1 = pts[:, 1].min(), pts[:, 1].max()
    if len(cells) > max_cells:
        raise ContractError("too many cells for an SVG wireframe; use a window")
    scale = width / (x1 - x0)
    height = max(1, int(round((y1 - y0) * scale)))
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           '<g fill="none" stroke="black" stroke-width="0.3">']
    for tri in cells:
        p = pts[tri]
        xy = " ".join(f"{(x - x0) * scale:.2f},{(y1 - y) * scale:.2f}"
                      for x, y in p)
        out.append(f'<polygon points="{xy}"/>')
    out.append("</g></svg>")
    with open(path, "w") as f:
        f.write("\n".join(out) + "\n")
    return path


# ---------------------------------------------------------------------------
# manifest

def tool_version():
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:
        from . import __version__
        return __version__


def write_manifest(directory, cfg, files):
    """Manifest with the config, its sha256 hash and the produced files."""
    man = {"tool": TOOL, "version": tool_version(),
           "config": cfg.to_dict(), "config_hash": cfg.hash(),
           "files": sorted(os.path.relpath(p, directory) for p in files)}
    return write_json(man, os.path.join(directory, "manifest.json"))


def read_manifest(path):
    from .config import RunConfig
    man = read_json(path)
    cfg = RunConfig.from_dict(man["config"])
    if cfg.hash() != man["config_hash"]:
        raise ContractError("manifest hash does not match its config")
    return man, cfg
