"""Graded triangulations of the eccentric annulus ``D \\ closure(D1)``.

The base grid is the bipolar (conformal) coordinate grid of the two
circles: ``tau`` is constant on each boundary circle and ``sigma`` runs
around them.  Uniform steps in ``(tau, sigma)`` give cells whose size
follows the local gap width, so the thin gap is resolved by ``n_layers``
cells with bounded aspect ratio at any ``eps``.  Cells that end up larger
than the far-field target are split by a 2:1 balanced quadtree; quads with
a finer neighbour are triangulated as a fan around their centre, which keeps
the triangulation conforming without hanging nodes.
"""
from __future__ import annotations

import enum
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.spatial import Delaunay

from .errors import ContractError, GeometryError, MeshQualityError
from .geometry import GapGeometry


class BoundaryTag(enum.IntEnum):
    OUTER = 0
    INCLUSION = 1


OUTER = BoundaryTag.OUTER
INCLUSION = BoundaryTag.INCLUSION

MATRIX_REGION = 0
INCLUSION_REGION = 1


@dataclass(frozen=True)
class GradingSpec:
    """Mesh grading controls.

    ``aspect`` is the column-to-layer ratio of the conformal base cells and
    ``boundary_angle`` the largest chord angle (radians) allowed on either
    circle.
    """
    n_layers: int = 8
    far_h: float = 0.1
    growth: float = 2.0
    min_angle: float = 15.0
    aspect: float = 2.5
    boundary_angle: float = 0.1

    def __post_init__(self):
        if int(self.n_layers) != self.n_layers or self.n_layers < 6:
            raise ContractError("n_layers must be an integer >= 6")
        if not 1.0 < self.growth <= 2.0:
            raise ContractError("growth must lie in (1, 2]")
        if self.min_angle < 15.0 or self.min_angle >= 60.0:
            raise ContractError("min_angle must lie in [15, 60) degrees")
        if self.far_h <= 0 or self.boundary_angle <= 0:
            raise ContractError("far_h and boundary_angle must be positive")
        if not 1.0 <= self.aspect <= 10.0:
            raise ContractError("aspect must lie in [1, 10]")


class BipolarFrame(NamedTuple):
    a: float
    c: float
    tau_o: float
    tau_i: float

    def scale(self, tau, sigma):
        return self.a / (np.cosh(tau) - np.cos(sigma))

    def points(self, tau, sigma_shifted):
        """Map ``(tau, sigma)`` with ``sigma = pi + sigma_shifted`` to the
        plane; ``sigma_shifted = 0`` is the symmetry axis through the gap."""
        s = np.sin(sigma_shifted)
        den = np.cosh(tau) + np.cos(sigma_shifted)
        x1 = -self.a * s / den
        x2 = self.c + self.a * np.sinh(tau) / den
        return np.column_stack([x1, x2])


def bipolar_frame(geom: GapGeometry) -> BipolarFrame:
    """Foci and boundary coordinates of the two circles in the canonical
    frame (both centres on the x2 axis)."""
    R_o, r = geom.outer.radius, geom.inclusion.radius
    s = geom.outer.center[1] - geom.inclusion.center[1]
    if s <= 0:
        raise GeometryError("bipolar frame needs the inclusion centre below "
                            "the outer centre")
    d_i = (R_o ** 2 - r ** 2 - s ** 2) / (2 * s)
    a = np.sqrt(d_i ** 2 - r ** 2)
    c = geom.inclusion.center[1] - d_i
    return BipolarFrame(float(a), float(c), float(np.arcsinh(a / R_o)),
                        float(np.arcsinh(a / r)))


@dataclass(eq=False)
class TriMesh:
    """Straight-sided triangulation with tagged boundary edges.

    ``cell_region`` is 0 for cells of the matrix phase and 1 for cells
    covering the inclusion (present only after :func:`mesh_inclusion`).
    """
    nodes: np.ndarray
    cells: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    cell_region: np.ndarray
    geom: GapGeometry
    spec: GradingSpec | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("nodes", "cells", "boundary_edges", "boundary_tags",
                     "cell_region"):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.setflags(write=False)
            setattr(self, name, arr)

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_cells(self):
        return len(self.cells)

    def signed_areas(self):
        p = self.nodes[self.cells]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def boundary_nodes(self, tag=None):
        sel = (self.boundary_edges if tag is None else
               self.boundary_edges[self.boundary_tags == int(tag)])
        return np.unique(sel)

    def node_is_boundary(self):
        flag = np.zeros(self.n_nodes, dtype=bool)
        flag[self.boundary_edges.ravel()] = True
        return flag

    def matrix_cells(self):
        return self.cells[self.cell_region == MATRIX_REGION]

    def curve(self, tag):
        return (self.geom.outer if int(tag) == OUTER
                else self.geom.inclusion)

    def project(self, points, tag):
        return self.curve(tag).project(points)


# ---------------------------------------------------------------------------
# topology helpers

def unique_edges(cells):
    """Sorted unique edges and, per cell, the indices of its edges in the
    local order (v0v1, v1v2, v2v0)."""
    local = np.stack([cells[:, [0, 1]], cells[:, [1, 2]], cells[:, [2, 0]]],
                     axis=1).reshape(-1, 2)
    local = np.sort(local, axis=1)
    edges, inv = np.unique(local, axis=0, return_inverse=True)
    return edges, inv.reshape(-1, 3)


def edge_incidence(cells):
    edges, cell_edges = unique_edges(cells)
    counts = np.bincount(cell_edges.ravel(), minlength=len(edges))
    return edges, cell_edges, counts


def _boundary_loops(edges):
    """Split a set of boundary edges into closed loops (lists of nodes)."""
    adj = {}
    for a, b in edges:
        adj.setdefault(int(a), []).append(int(b))
        adj.setdefault(int(b), []).append(int(a))
    if any(len(v) != 2 for v in adj.values()):
        return None
    seen = set()
    loops = []
    for start in sorted(adj):
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        prev, cur = start, adj[start][0]
        while cur != start:
            loop.append(cur)
            seen.add(cur)
            nxt = adj[cur][0] if adj[cur][0] != prev else adj[cur][1]
            prev, cur = cur, nxt
        loops.append(loop)
    return loops


def _orient(nodes, tris):
    p = nodes[tris]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    neg = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] < 0
    tris = tris.copy()
    tris[neg, 1], tris[neg, 2] = tris[neg, 2], tris[neg, 1].copy()
    return tris


def _tag_boundary(nodes, cells, geom, tol=1e-9):
    edges, _, counts = edge_incidence(cells)
    bnd = edges[counts == 1]
    on_out = np.all(np.abs(geom.outer.signed_distance(
        nodes[bnd.ravel()]).reshape(-1, 2)) < tol, axis=1)
    on_inc = np.all(np.abs(geom.inclusion.signed_distance(
        nodes[bnd.ravel()]).reshape(-1, 2)) < tol, axis=1)
    if np.any(on_out == on_inc):
        raise GeometryError("boundary edge not attributable to one curve")
    tags = np.where(on_out, int(OUTER), int(INCLUSION)).astype(np.int8)
    return bnd, tags


# ---------------------------------------------------------------------------
# quadtree over the conformal grid

def _balance(L, size, growth):
    """Raise levels until neighbours differ by at most one level and the
    effective cell sizes of neighbours differ by at most ``growth``."""
    L = L.copy()
    while True:
        before = L.copy()
        for axis, periodic in ((0, False), (1, True)):
            for shift in (1, -1):
                if periodic:
                    Ln = np.roll(L, shift, axis=1)
                    sn = np.roll(size, shift, axis=1)
                    valid = np.ones_like(L, dtype=bool)
                else:
                    Ln = np.roll(L, shift, axis=0)
                    sn = np.roll(size, shift, axis=0)
                    valid = np.ones_like(L, dtype=bool)
                    if shift == 1:
                        valid[0, :] = False
                    else:
                        valid[-1, :] = False
                need = np.where(valid, Ln - 1, 0)
                L = np.maximum(L, need)
                eff = size / 2.0 ** L
                effn = sn / 2.0 ** Ln
                L = np.where(valid & (eff > growth * effn), L + 1, L)
        if np.array_equal(L, before):
            return L


def _conformal_quadtree(geom: GapGeometry, spec: GradingSpec, aspect: float):
    bp = bipolar_frame(geom)
    n_tau = int(spec.n_layers)
    dtau = (bp.tau_i - bp.tau_o) / n_tau
    n_sig = int(np.ceil(2 * np.pi / (aspect * dtau)))
    n_sig = max(n_sig + n_sig % 2, 16)
    dsig = 2 * np.pi / n_sig

    # sizes of base cells; column j spans shifted sigma [j, j+1]*dsig - pi
    t = bp.tau_o + dtau * np.arange(n_tau + 1)
    s = dsig * np.arange(n_sig + 1) - np.pi
    H = bp.a / (np.cosh(t)[:, None] + np.cos(s)[None, :])
    hmax = np.maximum(np.maximum(H[:-1, :-1], H[1:, :-1]),
                      np.maximum(H[:-1, 1:], H[1:, 1:]))
    size = hmax * max(dtau, dsig)
    target = np.full(size.shape, spec.far_h)
    target[0, :] = min(spec.far_h, spec.boundary_angle * geom.outer.radius)
    target[-1, :] = min(spec.far_h,
                        spec.boundary_angle * geom.inclusion.radius)
    L0 = np.maximum(np.ceil(np.log2(size / target)), 0).astype(int)
    L = _balance(L0, size, spec.growth)
    Lmax = int(L.max())
    S = 1 << Lmax
    JN = n_sig * S
    IN = n_tau * S

    tris = []
    for i in range(n_tau):
        for j in range(n_sig):
            lev = L[i, j]
            nsub = 1 << lev
            st = S >> lev
            nb = {
                "lo": L[i - 1, j] if i > 0 else -1,
                "hi": L[i + 1, j] if i < n_tau - 1 else -1,
                "left": L[i, (j - 1) % n_sig],
                "right": L[i, (j + 1) % n_sig],
            }
            for p in range(nsub):
                I0 = i * S + p * st
                I1 = I0 + st
                for q in range(nsub):
                    J0 = j * S + q * st - JN // 2
                    J1 = J0 + st
                    hang = {
                        "lo": p == 0 and nb["lo"] == lev + 1,
                        "hi": p == nsub - 1 and nb["hi"] == lev + 1,
                        "left": q == 0 and nb["left"] == lev + 1,
                        "right": q == nsub - 1 and nb["right"] == lev + 1,
                    }
                    if not any(hang.values()):
                        if J0 >= 0:
                            tris.append(((I0, J0), (I0, J1), (I1, J1)))
                            tris.append(((I0, J0), (I1, J1), (I1, J0)))
                        else:
                            tris.append(((I0, J0), (I0, J1), (I1, J0)))
                            tris.append(((I0, J1), (I1, J1), (I1, J0)))
                        continue
                    h2 = st // 2
                    ring = [(I0, J0)]
                    if hang["lo"]:
                        ring.append((I0, J0 + h2))
                    ring.append((I0, J1))
                    if hang["right"]:
                        ring.append((I0 + h2, J1))
                    ring.append((I1, J1))
                    if hang["hi"]:
                        ring.append((I1, J0 + h2))
                    ring.append((I1, J0))
                    if hang["left"]:
                        ring.append((I0 + h2, J0))
                    center = (I0 + h2, J0 + h2)
                    for k in range(len(ring)):
                        tris.append((center, ring[k], ring[(k + 1) % len(ring)]))

    keys = np.array(tris, dtype=np.int64).reshape(-1, 2)
    # periodic identification in sigma
    J = (keys[:, 1] + JN // 2) % JN - JN // 2
    flat = keys[:, 0] * JN + (J + JN // 2)
    uniq, inv = np.unique(flat, return_inverse=True)
    I_u = uniq // JN
    J_u = uniq % JN - JN // 2
    tau = bp.tau_o + (bp.tau_i - bp.tau_o) * I_u / IN
    sig = J_u * (dsig / S)
    nodes = bp.points(tau, sig)
    out = I_u == 0
    inc = I_u == IN
    nodes[out] = geom.outer.project(nodes[out])
    nodes[inc] = geom.inclusion.project(nodes[inc])
    cells = _orient(nodes, inv.reshape(-1, 3))
    info = {"n_tau": n_tau, "n_sigma": n_sig, "aspect": aspect,
            "max_level": Lmax, "bipolar": bp._asdict()}
    return nodes, cells, info


def build_gap_mesh(geom: GapGeometry, spec: GradingSpec = GradingSpec(),
                   retries: int = 3) -> TriMesh:
    """Graded conforming triangulation of the matrix region.

    The aspect ratio of the base grid is reduced on each retry until the
    minimum-angle and growth targets are met.
    """
    cached = _cache_load(geom, spec)
    if cached is not None:
        return cached
    aspect = spec.aspect
    report = None
    for _ in range(retries + 1):
        nodes, cells, info = _conformal_quadtree(geom, spec, aspect)
        bnd, tags = _tag_boundary(nodes, cells, geom)
        mesh = TriMesh(nodes, cells, bnd, tags,
                       np.zeros(len(cells), dtype=np.int8), geom, spec, info)
        report = mesh_quality(mesh)
        if (report["min_angle"] >= spec.min_angle
                and report["growth"] <= spec.growth + 1e-9
                and report["min_area"] > 0):
            mesh.info["quality"] = report
            _cache_store(mesh)
            return mesh
        aspect = max(1.0, 0.8 * aspect)
    raise MeshQualityError(
        f"could not reach min_angle={spec.min_angle} / growth={spec.growth}",
        diagnostics=report)


def mesh_quality(mesh: TriMesh) -> dict:
    """Minimum angle (degrees), edge-ratio aspect, neighbour growth, areas."""
    p = mesh.nodes[mesh.cells]
    e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]],
                 axis=1)
    L = np.linalg.norm(e, axis=2)
    angles = []
    for k in range(3):
        u = -e[:, (k + 2) % 3]
        v = e[:, k]
        c = np.sum(u * v, axis=1) / (L[:, (k + 2) % 3] * L[:, k])
        angles.append(np.degrees(np.arccos(np.clip(c, -1, 1))))
    A = mesh.signed_areas()
    _, cell_edges, counts = edge_incidence(mesh.cells)
    # neighbour growth from pairs sharing an edge
    owners = np.argsort(cell_edges.ravel(), kind="stable")
    e_sorted = cell_edges.ravel()[owners]
    pair = np.nonzero(e_sorted[1:] == e_sorted[:-1])[0]
    c1 = owners[pair] // 3
    c2 = owners[pair + 1] // 3
    size = np.sqrt(np.abs(A))
    ratio = np.maximum(size[c1] / size[c2], size[c2] / size[c1])
    return {"min_angle": float(np.min(angles)),
            "max_aspect": float(np.max(L.max(1) / L.min(1))),
            "growth": float(ratio.max()) if len(ratio) else 1.0,
            "min_area": float(A.min()),
            "n_cells": int(mesh.n_cells),
            "n_nodes": int(mesh.n_nodes),
            "max_edge_count": int(counts.max())}


def check_mesh(mesh: TriMesh, tol=1e-12) -> dict:
    """Verify the structural invariants; returns a dictionary of checks."""
    A = mesh.signed_areas()
    _, _, counts = edge_incidence(mesh.cells)
    out = {"positive_area": bool(np.all(A > 0)),
           "conforming": bool(np.all((counts == 1) | (counts == 2)))}
    dist = []
    for tag in (OUTER, INCLUSION):
        nodes = mesh.boundary_nodes(tag)
        if len(nodes):
            dist.append(np.abs(mesh.curve(tag).signed_distance(
                mesh.nodes[nodes])).max())
    out["boundary_on_curve"] = bool(max(dist, default=0.0) <= tol)
    loops = {}
    for tag in (OUTER, INCLUSION):
        lp = _boundary_loops(mesh.boundary_edges[mesh.boundary_tags == tag])
        loops[tag.name] = None if lp is None else len(lp)
    out["single_loops"] = all(v == 1 for v in loops.values())
    out["loops"] = loops
    return out


def gap_layer_counts(mesh: TriMesh, xprimes) -> np.ndarray:
    """Number of cells crossed by the vertical line ``x1 = x'`` inside the
    gap, for each requested ``x'``."""
    geom = mesh.geom
    cells = mesh.matrix_cells()
    p = mesh.nodes[cells]
    xmin = p[:, :, 0].min(1)
    xmax = p[:, :, 0].max(1)
    ymax = p[:, :, 1].max(1)
    out = []
    for xp in np.atleast_1d(xprimes):
        top = geom.eps + geom.h1(xp)
        sel = (xmin < xp) & (xmax > xp) & (ymax <= top + 1e-12)
        # cells whose interior meets the line, counted by the segments cut
        out.append(int(np.count_nonzero(sel)))
    return np.array(out)


def gap_layers(mesh: TriMesh, xprimes, n_probe=4000) -> np.ndarray:
    """Minimum number of distinct cells met along the vertical segment
    between the two graphs at each ``x'`` (probe sampling).  Probes in the
    slivers between boundary chords and arcs are ignored."""
    from .fem import CellLocator
    loc = CellLocator(mesh.nodes, mesh.matrix_cells())
    geom = mesh.geom
    res = []
    for xp in np.atleast_1d(xprimes):
        lo = geom.h(xp)
        hi = geom.eps + geom.h1(xp)
        t = lo + (hi - lo) * (np.arange(n_probe) + 0.5) / n_probe
        pts = np.column_stack([np.full(n_probe, xp), t])
        cells = loc.locate_one(pts, strict=False)
        res.append(len(np.unique(cells[cells >= 0])))
    return np.array(res)


def refine_uniform(mesh: TriMesh) -> TriMesh:
    """Split every triangle into four; boundary midpoints are projected onto
    the analytic circles."""
    cells = mesh.cells
    edges, cell_edges = unique_edges(cells)
    nv = mesh.n_nodes
    mids = 0.5 * (mesh.nodes[edges[:, 0]] + mesh.nodes[edges[:, 1]])
    # project midpoints of boundary edges
    bsorted = np.sort(mesh.boundary_edges, axis=1)
    idx = _edge_lookup(edges, bsorted)
    for tag in (OUTER, INCLUSION):
        sel = idx[mesh.boundary_tags == tag]
        if len(sel):
            mids[sel] = mesh.project(mids[sel], tag)
    nodes = np.vstack([mesh.nodes, mids])
    m = cell_edges + nv
    v = cells
    new = np.concatenate([
        np.column_stack([v[:, 0], m[:, 0], m[:, 2]]),
        np.column_stack([m[:, 0], v[:, 1], m[:, 1]]),
        np.column_stack([m[:, 2], m[:, 1], v[:, 2]]),
        np.column_stack([m[:, 0], m[:, 1], m[:, 2]]),
    ])
    region = np.tile(mesh.cell_region, 4)
    be = mesh.boundary_edges
    bm = idx + nv
    new_bnd = np.concatenate([np.column_stack([be[:, 0], bm]),
                              np.column_stack([bm, be[:, 1]])])
    new_tags = np.concatenate([mesh.boundary_tags, mesh.boundary_tags])
    new = _orient(nodes, new)
    info = dict(mesh.info)
    info["refinements"] = info.get("refinements", 0) + 1
    info.pop("quality", None)
    out = TriMesh(nodes, new, new_bnd, new_tags, region, mesh.geom,
                  mesh.spec, info)
    if np.any(out.signed_areas() <= 0):
        raise GeometryError("boundary projection inverted a cell")
    return out


def _edge_lookup(edges, query):
    """Index of each sorted query edge in the sorted unique edge array."""
    n = int(max(edges.max(), query.max())) + 1
    key = edges[:, 0].astype(np.int64) * n + edges[:, 1]
    qk = query[:, 0].astype(np.int64) * n + query[:, 1]
    pos = np.searchsorted(key, qk)
    if np.any(pos >= len(key)) or np.any(key[np.minimum(pos, len(key) - 1)] != qk):
        raise GeometryError("boundary edge missing from the cell edges")
    return pos


def mesh_inclusion(mesh: TriMesh, n_rings=6) -> TriMesh:
    """Extend a matrix mesh with a triangulation of the inclusion.

    The inclusion cells reuse the boundary nodes of ``partial D1`` so the
    combined mesh is conforming; they carry region tag 1.
    """
    if np.any(mesh.cell_region != MATRIX_REGION):
        raise ContractError("mesh already covers the inclusion")
    geom = mesh.geom
    bnodes = mesh.boundary_nodes(INCLUSION)
    c = np.asarray(geom.inclusion.center)
    r = geom.inclusion.radius
    pts = [c[None, :]]
    for k in range(1, n_rings):
        rad = 0.9 * r * k / n_rings
        n = max(6, int(np.ceil(2 * np.pi * k)))
        th = 2 * np.pi * (np.arange(n) + 0.5 * (k % 2)) / n
        pts.append(c + rad * np.column_stack([np.cos(th), np.sin(th)]))
    interior = np.vstack(pts)
    allpts = np.vstack([mesh.nodes[bnodes], interior])
    tri = Delaunay(allpts).simplices
    local_to_global = np.concatenate(
        [bnodes, mesh.n_nodes + np.arange(len(interior))])
    nodes = np.vstack([mesh.nodes, interior])
    inc_cells = _orient(nodes, local_to_global[tri])
    keep = np.abs(_areas(nodes, inc_cells)) > 1e-14 * r * r
    inc_cells = inc_cells[keep]
    cells = np.vstack([mesh.cells, inc_cells])
    region = np.concatenate([mesh.cell_region,
                             np.full(len(inc_cells), INCLUSION_REGION,
                                     dtype=np.int8)])
    info = dict(mesh.info)
    info["with_inclusion"] = True
    out = TriMesh(nodes, cells, mesh.boundary_edges, mesh.boundary_tags,
                  region, geom, mesh.spec, info)
    _, _, counts = edge_incidence(out.cells)
    if np.any(counts > 2):
        raise GeometryError("inclusion triangulation overlaps the matrix mesh")
    return out


def _areas(nodes, tris):
    p = nodes[tris]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def segment_samples(geom: GapGeometry, m: int) -> np.ndarray:
    """``m`` points on the open segment from P to P1, kept ``eps/(2m)``
    away from both ends."""
    if m < 2:
        raise ContractError("segment_samples needs m >= 2")
    lo = float(geom.h(0.0))
    hi = geom.eps + float(geom.h1(0.0))
    t = lo + (hi - lo) * (np.arange(m) + 0.5) / m
    return np.column_stack([np.zeros(m), t])


# ---------------------------------------------------------------------------
# binary cache

def mesh_key(geom: GapGeometry, spec: GradingSpec) -> str:
    payload = json.dumps({"geom": geom.describe(), "spec": asdict(spec),
                          "version": 1}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


def _cache_dir():
    return os.environ.get("LAMEGAP_CACHE_DIR")


def _cache_load(geom, spec):
    d = _cache_dir()
    if not d:
        return None
    path = os.path.join(d, f"mesh-{mesh_key(geom, spec)}.npz")
    if not os.path.exists(path):
        return None
    with np.load(path) as f:
        info = json.loads(str(f["info"]))
        return TriMesh(f["nodes"], f["cells"], f["boundary_edges"],
                       f["boundary_tags"], f["cell_region"], geom, spec, info)


def _cache_store(mesh: TriMesh):
    d = _cache_dir()
    if not d:
        return
    os.makedirs(d, exist_ok=True)
    path = os.path.join(d, f"mesh-{mesh_key(mesh.geom, mesh.spec)}.npz")
    tmp = path + f".{os.getpid()}.tmp.npz"
    np.savez(tmp, nodes=mesh.nodes, cells=mesh.cells,
             boundary_edges=mesh.boundary_edges,
             boundary_tags=mesh.boundary_tags, cell_region=mesh.cell_region,
             info=json.dumps(mesh.info, default=float))
    os.replace(tmp, path)
