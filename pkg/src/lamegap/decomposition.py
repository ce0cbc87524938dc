"""Rigid-inclusion solution by superposition of auxiliary fields.

In the matrix region the solution is written as

    u - phi(P) = sum_alpha X_alpha u_alpha + u_0,

where ``u_alpha`` carries the rigid mode ``psi_alpha`` on the inclusion and
vanishes on the outer boundary, and ``u_0`` carries the outer data.  The
amplitudes follow from the zero-net-traction conditions on the inclusion,
a small symmetric positive definite system built from energy products.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import ContractError, SolverError
from .fem import (DofMap, FemField, SPDSolver, apply_dirichlet,
                  assemble_stiffness, energy_product, traction_functional)
from .geometry import BoundaryData, GapGeometry, MaterialParams, rigid_basis
from .mesh import INCLUSION, INCLUSION_REGION, OUTER, TriMesh

log = logging.getLogger(__name__)


@dataclass
class AuxiliarySolutions:
    u_alpha: list
    u_zero: FemField
    K: sp.csr_matrix
    dofs: DofMap
    phi: BoundaryData
    residuals: list = field(default_factory=list)
    trace_error: float = 0.0

    @property
    def n_modes(self):
        return len(self.u_alpha)

    @property
    def solve_residual(self):
        return max(self.residuals) if self.residuals else 0.0


def solve_auxiliary(mesh: TriMesh, dofs: DofMap | None, mat: MaterialParams,
                    geom: GapGeometry, phi: BoundaryData,
                    K=None) -> AuxiliarySolutions:
    """Solve the ``d(d+1)/2 + 1`` Dirichlet problems with one factorization."""
    if dofs is None:
        dofs = DofMap(mesh)
    if K is None:
        K = assemble_stiffness(dofs, mat)
    basis = rigid_basis(2)
    phiP = phi.phi_at_P

    loads = []
    for psi in basis:
        loads.append({INCLUSION: psi, OUTER: lambda x: np.zeros((len(x), 2))})
    loads.append({INCLUSION: lambda x: np.zeros((len(x), 2)),
                  OUTER: lambda x: phi(x) - phiP})

    systems = [apply_dirichlet(K, None, dofs, bc) for bc in loads]
    solver = SPDSolver(systems[0].A)
    fields, residuals = [], []
    trace_err = 0.0
    for k, rs in enumerate(systems):
        try:
            x = solver.solve(rs.b)
        except SolverError as exc:
            exc.problem = k
            raise
        residuals.append(solver.residual(x, rs.b) if np.any(rs.b) else 0.0)
        full = rs.expand(x)
        trace_err = max(trace_err, float(np.max(np.abs(full[rs.fixed] - rs.g),
                                                initial=0.0)))
        fields.append(FemField(dofs, full))
    if trace_err > 1e-12:
        raise SolverError(f"boundary traces off by {trace_err:.3e}")
    return AuxiliarySolutions(fields[:-1], fields[-1], K, dofs, phi,
                              residuals, trace_err)


@dataclass
class BlockSystem:
    a: np.ndarray
    b: np.ndarray
    d: int = 2

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)

    @property
    def A(self):
        return self.a[:self.d, :self.d]

    @property
    def B(self):
        return self.a[:self.d, self.d:]

    @property
    def Dblk(self):
        return self.a[self.d:, self.d:]

    @property
    def P1vec(self):
        return self.b[:self.d]

    @property
    def P2vec(self):
        return self.b[self.d:]

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.a)

    def min_eig(self):
        return float(self.eigenvalues()[0])


def assemble_block_system(aux: AuxiliarySolutions, K=None) -> BlockSystem:
    K = aux.K if K is None else K
    n = aux.n_modes
    a = np.empty((n, n))
    # K u_beta once per beta; entries filled symmetrically
    Ku = [K @ u.values for u in aux.u_alpha]
    for al in range(n):
        for be in range(al, n):
            a[al, be] = a[be, al] = float(aux.u_alpha[al].values @ Ku[be])
    b = np.array([-float(aux.u_zero.values @ Ku[be]) for be in range(n)])
    return BlockSystem(a, b)


@dataclass
class RigidCoefficients:
    C: np.ndarray
    X: np.ndarray
    phi_P: np.ndarray
    residual: float = 0.0
    d: int = 2

    @property
    def X1(self):
        return self.X[:self.d]

    @property
    def X2(self):
        return self.X[self.d:]

    @property
    def differences(self):
        """``C^alpha - phi^alpha(P)`` for the translation modes."""
        return self.C[:self.d] - self.phi_P

    def inclusion_displacement(self, x):
        """Rigid displacement ``sum C^alpha psi_alpha`` of the inclusion
        in the un-shifted frame."""
        basis = rigid_basis(self.d)
        return sum(c * psi(x) for c, psi in zip(self.C, basis))


def solve_coefficients(bs: BlockSystem, phi: BoundaryData) -> RigidCoefficients:
    try:
        cf = sla.cho_factor(bs.a, lower=False, check_finite=True)
    except sla.LinAlgError as exc:
        raise SolverError("block matrix is not positive definite") from exc
    X = sla.cho_solve(cf, bs.b)
    nb = np.linalg.norm(bs.b)
    res = float(np.linalg.norm(bs.a @ X - bs.b) / nb) if nb > 0 else \
        float(np.linalg.norm(bs.a @ X))
    if res > 1e-12:
        X = X + sla.cho_solve(cf, bs.b - bs.a @ X)
        res = float(np.linalg.norm(bs.a @ X - bs.b) / nb) if nb > 0 else 0.0
    if res > 1e-12:
        raise SolverError(f"block solve residual {res:.3e}", residual=res)
    phiP = phi.phi_at_P
    C = X.copy()
    C[:bs.d] += phiP
    return RigidCoefficients(C, X, phiP, res, bs.d)


def reconstruct(aux: AuxiliarySolutions, coeffs: RigidCoefficients) -> FemField:
    """Field ``u - phi(P)`` in the matrix region."""
    vals = aux.u_zero.values.copy()
    for x, u in zip(coeffs.X, aux.u_alpha):
        vals += x * u.values
    return FemField(aux.dofs, vals)


def inclusion_tractions(u: FemField, K) -> np.ndarray:
    """Consistent-flux pairing of ``u`` with every rigid mode on the
    inclusion boundary."""
    return np.array([traction_functional(u, K, INCLUSION, psi)
                     for psi in rigid_basis(2)])


@dataclass
class DecompositionResult:
    aux: AuxiliarySolutions
    block: BlockSystem
    coeffs: RigidCoefficients
    u: FemField

    @property
    def energy(self):
        """Matrix-region energy ``1/2 u^T K u``."""
        return 0.5 * energy_product(self.u, self.u, self.aux.K)


def decompose(mesh: TriMesh, mat: MaterialParams, geom: GapGeometry,
              phi: BoundaryData, dofs=None) -> DecompositionResult:
    aux = solve_auxiliary(mesh, dofs, mat, geom, phi)
    bs = assemble_block_system(aux)
    coeffs = solve_coefficients(bs, phi)
    u = reconstruct(aux, coeffs)
    return DecompositionResult(aux, bs, coeffs, u)


@dataclass
class MonolithicResult:
    u: FemField
    amplitudes: np.ndarray
    energy: float
    residual: float
    K: sp.csr_matrix


def monolithic_solve(mesh: TriMesh, mat: MaterialParams,
                     phi: BoundaryData, dofs=None) -> MonolithicResult:
    """Constrained minimization on a mesh of the whole body.

    All DOFs in the closed inclusion are replaced by three rigid
    amplitudes; the outer boundary carries ``phi - phi(P)``.  Amplitudes are
    returned in the shifted frame, i.e. ``C^alpha - phi^alpha(P)`` for
    translations and ``C^alpha`` for rotations.
    """
    if not np.any(mesh.cell_region == INCLUSION_REGION):
        raise ContractError("monolithic_solve needs the inclusion meshed")
    if dofs is None:
        dofs = DofMap(mesh)
    K = assemble_stiffness(dofs, mat)
    n = dofs.n_nodes
    incl_nodes = np.unique(dofs.cell_nodes[mesh.cell_region == INCLUSION_REGION])
    outer_nodes = dofs.boundary_nodes(OUTER)
    if np.intersect1d(incl_nodes, outer_nodes).size:
        raise ContractError("inclusion touches the outer boundary")
    is_incl = np.zeros(n, dtype=bool)
    is_incl[incl_nodes] = True
    is_outer = np.zeros(n, dtype=bool)
    is_outer[outer_nodes] = True
    free_nodes = np.nonzero(~is_incl & ~is_outer)[0]
    free = np.column_stack([2 * free_nodes, 2 * free_nodes + 1]).ravel()
    nf = len(free)

    basis = rigid_basis(2)
    xi = dofs.points[incl_nodes]
    rows = [free]
    cols = [np.arange(nf)]
    vals = [np.ones(nf)]
    for al, psi in enumerate(basis):
        pv = psi(xi)
        for comp in range(2):
            rows.append(2 * incl_nodes + comp)
            cols.append(np.full(len(incl_nodes), nf + al))
            vals.append(pv[:, comp])
    T = sp.csr_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(dofs.n_dofs, nf + len(basis)))
    g = np.zeros(dofs.n_dofs)
    phiP = phi.phi_at_P
    gv = phi(dofs.points[outer_nodes]) - phiP
    g[2 * outer_nodes] = gv[:, 0]
    g[2 * outer_nodes + 1] = gv[:, 1]

    A = (T.T @ K @ T).tocsc()
    A = 0.5 * (A + A.T)
    rhs = -(T.T @ (K @ g))
    solver = SPDSolver(A)
    z = solver.solve(rhs)
    res = solver.residual(z, rhs)
    u = FemField(dofs, T @ z + g)
    energy = 0.5 * energy_product(u, u, K)
    return MonolithicResult(u, z[nf:], energy, res, K)
