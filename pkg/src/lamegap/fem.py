"""Vector P2 finite elements for the isotropic Lamé operator in 2D."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg, splu
from scipy.spatial import cKDTree

from .errors import AssemblyError, ContractError, LocationError, SolverError
from .geometry import MaterialParams
from .mesh import INCLUSION, OUTER, TriMesh, unique_edges

log = logging.getLogger(__name__)

# symmetric 6-point rule, exact for degree 4 (weights sum to one)
_QA, _QWA = 0.445948490915965, 0.223381589678011
_QB, _QWB = 0.091576213509771, 0.109951743655322
QUAD_BARY = np.array([
    [_QA, _QA, 1 - 2 * _QA], [_QA, 1 - 2 * _QA, _QA], [1 - 2 * _QA, _QA, _QA],
    [_QB, _QB, 1 - 2 * _QB], [_QB, 1 - 2 * _QB, _QB], [1 - 2 * _QB, _QB, _QB],
])
QUAD_W = np.array([_QWA] * 3 + [_QWB] * 3)

_EDGE_PAIRS = ((0, 1), (1, 2), (2, 0))


def p2_values(L):
    """P2 shape functions at barycentric points ``L`` (..., 3) in the local
    order v0, v1, v2, m01, m12, m20."""
    L0, L1, L2 = L[..., 0], L[..., 1], L[..., 2]
    return np.stack([L0 * (2 * L0 - 1), L1 * (2 * L1 - 1), L2 * (2 * L2 - 1),
                     4 * L0 * L1, 4 * L1 * L2, 4 * L2 * L0], axis=-1)


def p2_gradients(L, glam):
    """Shape function gradients.

    ``L`` has shape (..., 3) and ``glam`` (..., 3, 2) holds the constant
    barycentric gradients of the cell; returns (..., 6, 2).
    """
    Le = L[..., :, None]
    out = [(4 * Le[..., i, :] - 1) * glam[..., i, :] for i in range(3)]
    for i, j in _EDGE_PAIRS:
        out.append(4 * (Le[..., i, :] * glam[..., j, :]
                        + Le[..., j, :] * glam[..., i, :]))
    return np.stack(out, axis=-2)


def barycentric_gradients(pts):
    """Areas and barycentric gradients for cells with vertex coordinates
    ``pts`` (n, 3, 2)."""
    x, y = pts[..., 0], pts[..., 1]
    det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - \
          (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    g = np.empty(pts.shape)
    g[:, 0, 0] = y[:, 1] - y[:, 2]
    g[:, 1, 0] = y[:, 2] - y[:, 0]
    g[:, 2, 0] = y[:, 0] - y[:, 1]
    g[:, 0, 1] = x[:, 2] - x[:, 1]
    g[:, 1, 1] = x[:, 0] - x[:, 2]
    g[:, 2, 1] = x[:, 1] - x[:, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        g /= det[:, None, None]
    return 0.5 * det, g


class DofMap:
    """P2 vector DOFs: one node per vertex and per edge midpoint.

    Global DOF ``2*node + component``.  Edge midpoints sit on the straight
    chord, also on the curved boundary.
    """

    def __init__(self, mesh: TriMesh):
        self.mesh = mesh
        self.d = 2
        edges, cell_edges = unique_edges(mesh.cells)
        nv = mesh.n_nodes
        self.n_vertices = nv
        self.edges = edges
        mids = 0.5 * (mesh.nodes[edges[:, 0]] + mesh.nodes[edges[:, 1]])
        self.points = np.vstack([mesh.nodes, mids])
        self.cell_nodes = np.hstack([mesh.cells, cell_edges + nv])
        self.n_nodes = len(self.points)
        self.n_dofs = 2 * self.n_nodes

        n = int(edges.max()) + 1
        key = edges[:, 0].astype(np.int64) * n + edges[:, 1]
        bsort = np.sort(mesh.boundary_edges, axis=1)
        bkey = bsort[:, 0].astype(np.int64) * n + bsort[:, 1]
        bidx = np.searchsorted(key, bkey)
        self._tag_nodes = {}
        for tag in (OUTER, INCLUSION):
            sel = mesh.boundary_tags == tag
            nodes = np.concatenate([mesh.boundary_edges[sel].ravel(),
                                    bidx[sel] + nv])
            self._tag_nodes[int(tag)] = np.unique(nodes)
        if np.intersect1d(self._tag_nodes[0], self._tag_nodes[1]).size:
            raise AssemblyError("boundary DOF sets of the two tags overlap")
        self._boundary_edge_mid = bidx + nv

    def boundary_nodes(self, tag):
        try:
            return self._tag_nodes[int(tag)]
        except KeyError:
            raise ContractError(f"unknown boundary tag {tag!r}") from None

    def boundary_dofs(self, tag):
        nodes = self.boundary_nodes(tag)
        return np.column_stack([2 * nodes, 2 * nodes + 1]).ravel()

    def all_boundary_nodes(self):
        return np.union1d(self._tag_nodes[0], self._tag_nodes[1])

    def interpolate(self, fn) -> "FemField":
        """Nodal interpolant of a vector function ``fn(points) -> (n, 2)``."""
        vals = np.asarray(fn(self.points), dtype=float).reshape(self.n_nodes, 2)
        return FemField(self, vals.ravel())

    def zeros(self) -> "FemField":
        return FemField(self, np.zeros(self.n_dofs))


def assemble_stiffness(dofs: DofMap, mat: MaterialParams,
                       regions=None) -> sp.csr_matrix:
    """Global stiffness ``int lam div u div v + 2 mu e(u):e(v)``.

    ``regions`` restricts assembly to cells with those region tags (all
    cells by default).
    """
    mesh = dofs.mesh
    sel = np.ones(mesh.n_cells, dtype=bool)
    if regions is not None:
        sel = np.isin(mesh.cell_region, np.atleast_1d(regions))
    cn = dofs.cell_nodes[sel]
    pts = mesh.nodes[mesh.cells[sel]]
    area, glam = barycentric_gradients(pts)
    scale = np.abs(pts - pts.mean(1, keepdims=True)).max()
    if np.any(~np.isfinite(area)) or np.any(np.abs(area) <= 1e-14 * scale ** 2):
        bad = np.nonzero(np.abs(area) <= 1e-14 * scale ** 2)[0]
        raise AssemblyError(f"degenerate element Jacobian in cells {bad[:5]}")
    if np.any(area < 0):
        raise AssemblyError("negatively oriented cells")
    Dm = mat.voigt()
    nc = len(cn)
    Ke = np.zeros((nc, 12, 12))
    for q in range(len(QUAD_W)):
        G = p2_gradients(np.broadcast_to(QUAD_BARY[q], (nc, 3)), glam)
        B = np.zeros((nc, 3, 12))
        B[:, 0, 0::2] = G[:, :, 0]
        B[:, 1, 1::2] = G[:, :, 1]
        B[:, 2, 0::2] = G[:, :, 1]
        B[:, 2, 1::2] = G[:, :, 0]
        Ke += (QUAD_W[q] * area)[:, None, None] * np.einsum(
            "cia,ij,cjb->cab", B, Dm, B, optimize=True)
    Ke = 0.5 * (Ke + Ke.transpose(0, 2, 1))
    ldofs = np.empty((nc, 12), dtype=np.int64)
    ldofs[:, 0::2] = 2 * cn
    ldofs[:, 1::2] = 2 * cn + 1
    rows = np.repeat(ldofs, 12, axis=1).ravel()
    cols = np.tile(ldofs, (1, 12)).ravel()
    K = sp.coo_matrix((Ke.ravel(), (rows, cols)),
                      shape=(dofs.n_dofs, dofs.n_dofs)).tocsr()
    K.sum_duplicates()
    # duplicate summation order differs between (i, j) and (j, i)
    K = ((K + K.T) * 0.5).tocsr()
    K.sort_indices()
    empty = np.diff(K.indptr) == 0
    if regions is None and np.any(empty):
        raise AssemblyError(f"{int(empty.sum())} DOFs have empty rows")
    return K


@dataclass
class ReducedSystem:
    A: sp.csc_matrix
    b: np.ndarray
    free: np.ndarray
    fixed: np.ndarray
    g: np.ndarray
    n_dofs: int

    def expand(self, x_free):
        x_free = np.asarray(x_free)
        shape = (self.n_dofs,) + x_free.shape[1:]
        u = np.zeros(shape)
        u[self.free] = x_free
        u[self.fixed] = self.g if x_free.ndim == 1 else self.g[:, None]
        return u


def apply_dirichlet(K, rhs, dofs: DofMap, values: dict) -> ReducedSystem:
    """Symmetric elimination of Dirichlet data given per boundary tag.

    ``values[tag]`` is a callable ``x -> (n, 2)`` or an array over the tag's
    boundary nodes.  Every boundary tag present in the mesh must be given.
    """
    fixed_parts, g_parts = [], []
    for tag in (OUTER, INCLUSION):
        nodes = dofs.boundary_nodes(tag)
        if nodes.size == 0:
            continue
        if int(tag) not in {int(t) for t in values}:
            raise ContractError(f"no Dirichlet data for boundary {tag.name}")
        val = {int(t): v for t, v in values.items()}[int(tag)]
        if callable(val):
            val = val(dofs.points[nodes])
        val = np.asarray(val, dtype=float).reshape(len(nodes), 2)
        fixed_parts.append(np.column_stack([2 * nodes, 2 * nodes + 1]).ravel())
        g_parts.append(val.ravel())
    fixed = np.concatenate(fixed_parts)
    g = np.concatenate(g_parts)
    order = np.argsort(fixed)
    fixed, g = fixed[order], g[order]
    mask = np.ones(dofs.n_dofs, dtype=bool)
    mask[fixed] = False
    free = np.nonzero(mask)[0]
    rhs = np.zeros(dofs.n_dofs) if rhs is None else np.asarray(rhs, float)
    K = sp.csr_matrix(K)
    b = rhs[free] - K[free][:, fixed] @ g
    A = K[free][:, free].tocsc()
    return ReducedSystem(A, b, free, fixed, g, dofs.n_dofs)


class SPDSolver:
    """Symmetric sparse factorization with a fill-reducing ordering.

    SuperLU is run in symmetric mode without pivoting, so the factorization
    is an LDL^T in disguise; all pivots must be positive for an SPD matrix.
    A Jacobi-preconditioned CG run is the fallback.
    """

    def __init__(self, A, rtol=1e-10):
        A = sp.csc_matrix(A)
        if A.shape[0] != A.shape[1]:
            raise ContractError("matrix must be square")
        self.A = A
        self.rtol = rtol
        self.lu = None
        self.method = "cholesky"
        try:
            lu = splu(A, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                      options={"SymmetricMode": True})
        except RuntimeError as exc:
            if "singular" in str(exc).lower():
                raise SolverError(f"matrix is singular: {exc}") from exc
            log.warning("sparse factorization failed (%s); using PCG", exc)
            self.method = "pcg"
            return
        except MemoryError:
            log.warning("sparse factorization out of memory; using PCG")
            self.method = "pcg"
            return
        piv = lu.U.diagonal()
        if not np.all(np.isfinite(piv)):
            raise SolverError("non-finite pivot in factorization")
        pmax = np.abs(piv).max() if piv.size else 1.0
        if np.any(piv <= 1e-14 * pmax):
            raise SolverError(
                f"matrix is not positive definite (min pivot {piv.min():.3e})")
        self.lu = lu

    def _pcg(self, b, x0=None):
        diag = self.A.diagonal()
        if np.any(diag <= 0):
            raise SolverError("non-positive diagonal; matrix is not SPD")
        M = sp.diags(1.0 / diag)
        x, info = cg(self.A, b, x0=x0, rtol=0.1 * self.rtol, atol=0.0,
                     maxiter=20000, M=M)
        return x

    def residual(self, x, b):
        nb = np.linalg.norm(b)
        r = np.linalg.norm(self.A @ x - b)
        return r / nb if nb > 0 else r

    def solve(self, b):
        b = np.asarray(b, dtype=float)
        if b.ndim == 2:
            return np.column_stack([self.solve(b[:, k])
                                    for k in range(b.shape[1])])
        if not np.any(b):
            return np.zeros_like(b)
        if self.lu is not None:
            x = self.lu.solve(b)
            for _ in range(2):
                if self.residual(x, b) <= self.rtol:
                    break
                x = x + self.lu.solve(b - self.A @ x)
        else:
            x = self._pcg(b)
        res = self.residual(x, b)
        if res > self.rtol and self.lu is not None:
            x = self._pcg(b, x0=x)
            res = self.residual(x, b)
        if not res <= self.rtol:
            raise SolverError(f"solve did not converge (residual {res:.3e})",
                              residual=res)
        return x


def solve_spd(A, b, rtol=1e-10):
    return SPDSolver(A, rtol).solve(b)


class CellLocator:
    """Point location over a triangulation (k-d tree of centroids)."""

    def __init__(self, nodes, cells, k=12):
        self.nodes = np.asarray(nodes)
        self.cells = np.asarray(cells)
        pts = self.nodes[self.cells]
        self.area, self.glam = barycentric_gradients(pts)
        self.tree = cKDTree(pts.mean(1))
        self.k = min(k, len(self.cells))
        self.h = np.sqrt(np.abs(self.area)).max()

    def bary(self, points, cells):
        """Barycentric coordinates of ``points`` (n, 2) in ``cells`` (n, k)."""
        v0 = self.nodes[self.cells[cells, 0]]
        g = self.glam[cells]
        L12 = np.einsum("...ij,...j->...i", g[..., 1:, :],
                        points[..., None, :] - v0)
        return np.concatenate([1 - L12.sum(-1, keepdims=True), L12], axis=-1)

    def candidates(self, points, tol=1e-10, strict=True):
        """For each point, candidate cells (n, k), barycentrics and a mask of
        the cells that contain the point.  With ``strict=False`` points not
        found among the nearest cells get an all-false mask instead of a
        full search (and no error)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        _, idx = self.tree.query(points, k=self.k)
        idx = idx.reshape(len(points), -1)
        L = self.bary(points, idx)
        inside = np.all(L >= -tol, axis=-1)
        missing = np.nonzero(~inside.any(1))[0]
        if missing.size and strict:
            allc = np.arange(len(self.cells))
            for p in missing:
                Lp = self.bary(np.broadcast_to(points[p], (len(allc), 2)),
                               allc)
                hit = np.nonzero(np.all(Lp >= -tol, axis=-1))[0]
                if hit.size == 0:
                    raise LocationError(f"point {points[p]} is outside the mesh")
                hit = hit[:self.k]
                idx[p, :] = hit[0]
                idx[p, :len(hit)] = hit
                L[p] = self.bary(np.broadcast_to(points[p], (self.k, 2)),
                                 idx[p])
                inside[p] = False
                inside[p, :len(hit)] = True
        return idx, L, inside

    def locate_one(self, points, tol=1e-10, strict=True):
        """Containing cell of each point; -1 outside when not strict."""
        idx, _, inside = self.candidates(points, tol, strict)
        out = idx[np.arange(len(idx)), np.argmax(inside, axis=1)]
        return np.where(inside.any(1), out, -1)


class FemField:
    """P2 vector field: DOF vector over a :class:`DofMap`."""

    def __init__(self, dofs: DofMap, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (dofs.n_dofs,):
            raise ContractError(
                f"expected {dofs.n_dofs} DOF values, got {values.shape}")
        self.dofs = dofs
        self.values = values

    @property
    def nodal(self):
        return self.values.reshape(-1, 2)

    def __add__(self, other):
        self._same(other)
        return FemField(self.dofs, self.values + other.values)

    def __sub__(self, other):
        self._same(other)
        return FemField(self.dofs, self.values - other.values)

    def __mul__(self, s):
        return FemField(self.dofs, float(s) * self.values)

    __rmul__ = __mul__

    def _same(self, other):
        if other.dofs is not self.dofs:
            raise ContractError("fields live on different DOF maps")

    def _locator(self):
        loc = getattr(self.dofs, "_locator", None)
        if loc is None:
            mesh = self.dofs.mesh
            loc = CellLocator(mesh.nodes, mesh.cells)
            self.dofs._locator = loc
        return loc

    def evaluate(self, points):
        loc = self._locator()
        points = np.atleast_2d(points)
        cell = loc.locate_one(points)
        L = loc.bary(points, cell[:, None])[:, 0]
        N = p2_values(L)
        U = self.nodal[self.dofs.cell_nodes[cell]]
        return np.einsum("ni,nic->nc", N, U)

    def gradient(self, points):
        """Gradients ``G[n, l, k] = d u_l / d x_k``; points on shared edges
        or vertices get the area-weighted mean over the touching cells."""
        loc = self._locator()
        points = np.atleast_2d(np.asarray(points, dtype=float))
        idx, L, inside = loc.candidates(points)
        G = p2_gradients(L, loc.glam[idx])          # (n, k, 6, 2)
        U = self.nodal[self.dofs.cell_nodes[idx]]   # (n, k, 6, 2)
        grads = np.einsum("nkil,nkic->nklc", U, G)
        w = inside * np.abs(loc.area[idx])
        return np.einsum("nk,nklc->nlc", w, grads) / w.sum(1)[:, None, None]

    def gradient_norm(self, points):
        return np.linalg.norm(self.gradient(points), axis=(1, 2))

    def cell_gradients(self, bary):
        """Gradients at a fixed barycentric point in every cell (nc, 2, 2)."""
        mesh = self.dofs.mesh
        _, glam = barycentric_gradients(mesh.nodes[mesh.cells])
        G = p2_gradients(np.broadcast_to(bary, (mesh.n_cells, 3)), glam)
        U = self.nodal[self.dofs.cell_nodes]
        return np.einsum("cil,cik->clk", U, G)


def energy_product(u: FemField, v: FemField, K) -> float:
    if u.values.shape != v.values.shape or K.shape[0] != u.values.size:
        raise ContractError("dimension mismatch in energy_product")
    return float(u.values @ (K @ v.values))


def traction_functional(u: FemField, K, tag, psi, rhs=None) -> float:
    """Consistent-flux traction on boundary ``tag`` paired with ``psi``.

    The residual ``K u - rhs`` restricted to the tag's DOFs is contracted
    with the nodal interpolant of ``psi``; the normal points into the
    matrix region, so the pairing of ``u_alpha`` with ``psi_beta`` on the
    inclusion gives ``-a_{alpha beta}``.
    """
    dofs = u.dofs
    nodes = dofs.boundary_nodes(tag)
    if nodes.size == 0:
        raise ContractError(f"boundary {tag!r} is absent from the mesh")
    r = K @ u.values
    if rhs is not None:
        r = r - rhs
    r = r.reshape(-1, 2)[nodes]
    pv = np.asarray(psi(dofs.points[nodes]), dtype=float).reshape(-1, 2)
    return float(-np.sum(r * pv))


def stress(mat: MaterialParams, G):
    """Cauchy stress from displacement gradients (..., 2, 2)."""
    e = 0.5 * (G + np.swapaxes(G, -1, -2))
    tr = e[..., 0, 0] + e[..., 1, 1]
    return mat.lam * tr[..., None, None] * np.eye(2) + 2 * mat.mu * e


def surface_traction(u: FemField, mat: MaterialParams, tag, psi,
                     n_gauss=3) -> float:
    """Traction pairing by direct differentiation on the boundary edges.

    Stresses come from the adjacent cell; the normal points into the
    matrix region.  Independent of the residual pairing and therefore a
    measurable discretization error.
    """
    dofs = u.dofs
    mesh = dofs.mesh
    sel = mesh.boundary_tags == int(tag)
    if not np.any(sel):
        raise ContractError(f"boundary {tag!r} is absent from the mesh")
    bedges = mesh.boundary_edges[sel]
    # owner cell of each boundary edge
    cells = mesh.cells
    local = np.sort(np.stack([cells[:, [0, 1]], cells[:, [1, 2]],
                              cells[:, [2, 0]]], axis=1).reshape(-1, 2), axis=1)
    n = mesh.n_nodes
    keys = local[:, 0].astype(np.int64) * n + local[:, 1]
    order = np.argsort(keys)
    bs = np.sort(bedges, axis=1)
    bkeys = bs[:, 0].astype(np.int64) * n + bs[:, 1]
    pos = order[np.searchsorted(keys[order], bkeys)]
    owner = pos // 3
    if mesh.cell_region is not None:
        # on a mesh covering the inclusion, use the matrix-side cell
        reg = mesh.cell_region[owner]
        if np.any(reg != 0):
            alt = order[np.searchsorted(keys[order], bkeys, side="right") - 1]
            owner = np.where(reg != 0, alt // 3, owner)
    pts = mesh.nodes[cells[owner]]
    _, glam = barycentric_gradients(pts)
    a = mesh.nodes[bedges[:, 0]]
    b = mesh.nodes[bedges[:, 1]]
    t = b - a
    length = np.linalg.norm(t, axis=1)
    nrm = np.column_stack([-t[:, 1], t[:, 0]]) / length[:, None]
    into = pts.mean(1) - 0.5 * (a + b)
    nrm *= np.sign(np.sum(nrm * into, axis=1))[:, None]
    gx, gw = np.polynomial.legendre.leggauss(n_gauss)
    total = 0.0
    U = u.nodal[dofs.cell_nodes[owner]]
    for s, w in zip(0.5 * (gx + 1), 0.5 * gw):
        x = a + s * t
        v0 = pts[:, 0]
        L12 = np.einsum("nij,nj->ni", glam[:, 1:, :], x - v0)
        L = np.column_stack([1 - L12.sum(1), L12])
        G = np.einsum("nil,nik->nlk", U, p2_gradients(L, glam))
        sig = stress(mat, G)
        tr = np.einsum("nlk,nk->nl", sig, nrm)
        pv = np.asarray(psi(x), dtype=float).reshape(-1, 2)
        total += np.sum(w * length * np.sum(tr * pv, axis=1))
    return float(total)
