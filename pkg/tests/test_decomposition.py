import numpy as np
import pytest

from lamegap.decomposition import (BlockSystem, assemble_block_system,
                                   decompose, monolithic_solve, reconstruct,
                                   solve_auxiliary, solve_coefficients)
from lamegap.errors import SolverError
from lamegap.fem import FemField, energy_product, traction_functional
from lamegap.geometry import BoundaryData, rigid_basis
from lamegap.mesh import INCLUSION, OUTER, mesh_inclusion, refine_uniform


def test_traces_and_residuals(coarse_aux):
    assert coarse_aux.trace_error <= 1e-12
    assert coarse_aux.solve_residual <= 1e-10
    dofs = coarse_aux.dofs
    inc = dofs.boundary_nodes(INCLUSION)
    out = dofs.boundary_nodes(OUTER)
    for psi, u in zip(rigid_basis(2), coarse_aux.u_alpha):
        np.testing.assert_allclose(u.nodal[inc], psi(dofs.points[inc]),
                                   atol=1e-12)
        np.testing.assert_allclose(u.nodal[out], 0.0, atol=1e-12)
    phi = coarse_aux.phi
    np.testing.assert_allclose(coarse_aux.u_zero.nodal[out],
                               phi(dofs.points[out]) - phi.phi_at_P,
                               atol=1e-12)
    np.testing.assert_allclose(coarse_aux.u_zero.nodal[inc], 0.0, atol=1e-12)


def test_translation_field_max_on_inclusion(coarse_aux):
    inc = coarse_aux.dofs.boundary_nodes(INCLUSION)
    for u in coarse_aux.u_alpha[:2]:
        n = np.linalg.norm(u.nodal, axis=1)
        assert n.max() <= 1.0 + 1e-12
        assert np.argmax(n) in inc


def test_block_symmetric_and_positive(coarse_aux):
    bs = assemble_block_system(coarse_aux)
    assert np.array_equal(bs.a, bs.a.T)
    assert bs.min_eig() > 0
    assert bs.A.shape == (2, 2) and bs.B.shape == (2, 1)
    assert bs.Dblk.shape == (1, 1)
    np.testing.assert_array_equal(np.concatenate([bs.P1vec, bs.P2vec]), bs.b)


def test_block_entries_are_energy_products(coarse_aux):
    bs = assemble_block_system(coarse_aux)
    K = coarse_aux.K
    for a, ua in enumerate(coarse_aux.u_alpha):
        for b, ub in enumerate(coarse_aux.u_alpha):
            assert bs.a[a, b] == pytest.approx(energy_product(ua, ub, K),
                                               rel=1e-13)
        assert bs.b[a] == pytest.approx(
            -energy_product(coarse_aux.u_zero, ua, K), rel=1e-13, abs=1e-15)


def test_constant_data(coarse_mesh, mat, geom):
    phi = BoundaryData.preset("constant", (0.7, -1.2))
    res = decompose(coarse_mesh, mat, geom, phi)
    assert np.abs(res.aux.u_zero.values).max() == 0.0
    np.testing.assert_array_equal(res.block.b, 0.0)
    np.testing.assert_array_equal(res.coeffs.X, 0.0)
    np.testing.assert_allclose(res.coeffs.C, [0.7, -1.2, 0.0])
    assert np.abs(res.u.values).max() == 0.0
    full = mesh_inclusion(coarse_mesh)
    mono = monolithic_solve(full, mat, phi)
    assert mono.energy == pytest.approx(0.0, abs=1e-14)
    np.testing.assert_allclose(mono.amplitudes, 0.0, atol=1e-12)


def test_coefficient_residual(coarse_result):
    c = coarse_result.coeffs
    assert c.residual <= 1e-12
    np.testing.assert_allclose(c.X1, c.differences)
    np.testing.assert_array_equal(c.X2, c.C[2:])


def test_non_pd_block_rejected(shear):
    bs = BlockSystem(np.diag([1.0, -1.0, 1.0]), np.ones(3))
    with pytest.raises(SolverError):
        solve_coefficients(bs, shear)


def test_scaling_equivariance(coarse_mesh, mat, geom):
    phi = BoundaryData.from_coefficients([[[0, 1, 1.0], [2, 0, 0.3]],
                                          [[0, 1, 1.0], [1, 1, -0.5]]])
    r1 = decompose(coarse_mesh, mat, geom, phi)
    s = -2.5
    r2 = decompose(coarse_mesh, mat, geom, phi.scaled(s))
    np.testing.assert_allclose(r2.block.b, s * r1.block.b, rtol=1e-12)
    np.testing.assert_allclose(r2.coeffs.X, s * r1.coeffs.X, rtol=1e-10)
    scale = np.abs(r1.u.values).max()
    np.testing.assert_allclose(r2.u.values, s * r1.u.values,
                               atol=1e-10 * scale)


@pytest.mark.parametrize("beta", [0, 1, 2])
def test_translation_test(coarse_mesh, mat, geom, beta):
    # phi = psi_beta - psi_beta(P) is a global rigid motion: zero energy
    psi = rigid_basis(2)[beta]
    W = psi.grad
    coeffs = [[[1 - k, k, W[l, k]] for k in range(2) if W[l, k]]
              for l in range(2)]
    phi = BoundaryData.from_coefficients(coeffs)
    res = decompose(coarse_mesh, mat, geom, phi)
    assert res.energy <= 1e-10 * abs(res.block.a).max()
    expected = np.array([0.0, 0.0, 1.0 if beta == 2 else 0.0])
    np.testing.assert_allclose(res.coeffs.C, expected, atol=1e-8)


def test_energy_minimality(coarse_result, rng):
    u = coarse_result.u
    aux = coarse_result.aux
    K = aux.K
    dofs = aux.dofs
    e0 = 0.5 * energy_product(u, u, K)
    out = dofs.boundary_dofs(OUTER)
    inc = dofs.boundary_dofs(INCLUSION)
    inc_nodes = dofs.boundary_nodes(INCLUSION)
    for _ in range(20):
        w = rng.normal(size=dofs.n_dofs) * 1e-2
        w[out] = 0.0
        # rigid motion of the inclusion is admissible
        rig = sum(c * psi(dofs.points[inc_nodes])
                  for c, psi in zip(rng.normal(size=3) * 1e-2, rigid_basis(2)))
        w[inc] = rig.ravel()
        v = u + FemField(dofs, w)
        assert 0.5 * energy_product(v, v, K) > e0


def test_monolithic_equivalence(coarse_mesh, mat, geom, shear, coarse_result):
    full = mesh_inclusion(coarse_mesh)
    mono = monolithic_solve(full, mat, shear)
    e = coarse_result.energy
    assert abs(mono.energy - e) / e <= 1e-8
    np.testing.assert_allclose(mono.amplitudes, coarse_result.coeffs.X,
                               atol=1e-6)


def test_gram_identity_on_refinement(coarse_mesh, mat, geom, shear):
    for mesh in (coarse_mesh, refine_uniform(coarse_mesh)):
        aux = solve_auxiliary(mesh, None, mat, geom, shear)
        bs = assemble_block_system(aux)
        for a, u in enumerate(aux.u_alpha):
            for b, psi in enumerate(rigid_basis(2)):
                t = traction_functional(u, aux.K, INCLUSION, psi)
                assert abs(bs.a[a, b] + t) <= 1e-9 * abs(bs.a).max()


def test_reconstruct_is_linear_combination(coarse_result):
    aux, c = coarse_result.aux, coarse_result.coeffs
    u = reconstruct(aux, c)
    manual = aux.u_zero.values + sum(x * ua.values
                                     for x, ua in zip(c.X, aux.u_alpha))
    np.testing.assert_allclose(u.values, manual, rtol=0, atol=1e-14)


def test_inclusion_displacement(coarse_result):
    c = coarse_result.coeffs
    x = np.array([[0.1, 0.4]])
    expect = c.C[0] * np.array([1, 0]) + c.C[1] * np.array([0, 1]) \
        + c.C[2] * np.array([0.4, -0.1])
    np.testing.assert_allclose(c.inclusion_displacement(x)[0], expect)
