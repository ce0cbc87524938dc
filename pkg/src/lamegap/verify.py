"""Finite element verification checks shared by the CLI and the tests."""
from __future__ import annotations

import numpy as np
from scipy.sparse.linalg import eigsh

from .decomposition import assemble_block_system, solve_auxiliary
from .fem import (DofMap, SPDSolver, apply_dirichlet, assemble_stiffness,
                  traction_functional)
from .geometry import (BoundaryData, MaterialParams, disk_configuration,
                       elasticity_form, rigid_basis)
from .mesh import INCLUSION, OUTER, GradingSpec, build_gap_mesh

COARSE = GradingSpec(n_layers=6, far_h=0.25, boundary_angle=0.3, aspect=3.0)


def patch_test(mesh, mat, seed=0) -> float:
    """Impose a random affine field on both boundaries; max nodal error."""
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(2, 2))
    c = rng.normal(size=2)

    def lin(x):
        return x @ A.T + c

    dofs = DofMap(mesh)
    K = assemble_stiffness(dofs, mat)
    rs = apply_dirichlet(K, None, dofs, {OUTER: lin, INCLUSION: lin})
    u = rs.expand(SPDSolver(rs.A).solve(rs.b)).reshape(-1, 2)
    return float(np.abs(u - lin(dofs.points)).max())


def kernel_spectrum(mesh, mat, k=5):
    """Smallest eigenvalues of the floating stiffness (no boundary data),
    normalized by the largest diagonal entry."""
    dofs = DofMap(mesh)
    K = assemble_stiffness(dofs, mat).tocsc()
    scale = K.diagonal().max()
    vals = eigsh(K / scale, k=k, sigma=-1e-3, which="LM",
                 return_eigenvectors=False)
    return np.sort(vals)


def kernel_count(mesh, mat, ratio=1e-8) -> int:
    """Number of eigenvalues below ``ratio`` times the next one."""
    vals = np.abs(kernel_spectrum(mesh, mat))
    for n in range(len(vals) - 1, 0, -1):
        if vals[n - 1] <= ratio * vals[n]:
            return n
    return 0


def ellipticity_sandwich(mat, n=100, seed=0) -> dict:
    """Check ``lo |E|^2 <= (C E, E) <= hi |E|^2`` and the margin form
    ``delta0 |E|^2 <= (C E, E) <= (2/delta0) |E|^2`` on random symmetric
    matrices."""
    rng = np.random.default_rng(seed)
    lo, hi = mat.ellipticity_bounds()
    worst_lo, worst_hi = np.inf, -np.inf
    ok = True
    for _ in range(n):
        M = rng.normal(size=(2, 2))
        E = 0.5 * (M + M.T)
        q = elasticity_form(mat, E, E)
        nn = float(np.sum(E * E))
        worst_lo = min(worst_lo, q / nn)
        worst_hi = max(worst_hi, q / nn)
        ok &= lo * nn * (1 - 1e-12) <= q <= hi * nn * (1 + 1e-12)
        ok &= mat.delta0 * nn <= q <= 2 * nn / mat.delta0
    return {"ok": bool(ok), "min_ratio": worst_lo, "max_ratio": worst_hi,
            "bounds": [lo, hi]}


def gram_identity(aux) -> float:
    """Max over pairs of ``|a_ab + traction(u_a, inclusion, psi_b)|``."""
    bs = assemble_block_system(aux)
    err = 0.0
    for a, u in enumerate(aux.u_alpha):
        for b, psi in enumerate(rigid_basis(2)):
            t = traction_functional(u, aux.K, INCLUSION, psi)
            err = max(err, abs(bs.a[a, b] + t))
    return err


def equilibrium(u, K) -> float:
    """Total traction against ``e1`` and ``e2`` over both boundaries."""
    out = 0.0
    for psi in rigid_basis(2)[:2]:
        t = (traction_functional(u, K, INCLUSION, psi)
             + traction_functional(u, K, OUTER, psi))
        out = max(out, abs(t))
    return out


def run_checks(eps=0.04, mat=None, spec=COARSE, phi=None) -> dict:
    """Verification suite on a coarse disk configuration."""
    mat = MaterialParams() if mat is None else mat
    phi = BoundaryData.preset("vertical_shear") if phi is None else phi
    geom = disk_configuration(eps=eps)
    mesh = build_gap_mesh(geom, spec)
    report = {}
    err = patch_test(mesh, mat)
    report["patch_test"] = {"max_error": err, "ok": err <= 1e-10}
    n = kernel_count(mesh, mat)
    report["kernel_count"] = {"count": n, "ok": n == 3}
    report["ellipticity"] = ellipticity_sandwich(mat)
    aux = solve_auxiliary(mesh, None, mat, geom, phi)
    scale = max(1.0, np.abs(assemble_block_system(aux).a).max())
    g = gram_identity(aux)
    report["gram_identity"] = {"max_error": g, "ok": g <= 1e-9 * scale}
    e = equilibrium(aux.u_zero, aux.K)
    report["equilibrium"] = {"max_error": e, "ok": e <= 1e-9 * scale}
    report["ok"] = all(v["ok"] for v in report.values())
    return report
