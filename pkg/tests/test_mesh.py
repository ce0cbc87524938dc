import numpy as np
import pytest

from lamegap.errors import ContractError, MeshQualityError
from lamegap.geometry import disk_configuration
from lamegap.mesh import (INCLUSION, OUTER, GradingSpec, build_gap_mesh,
                          check_mesh, edge_incidence, gap_layers,
                          mesh_inclusion, mesh_quality, refine_uniform,
                          segment_samples)

from conftest import COARSE


def test_spec_validation():
    with pytest.raises(ContractError):
        GradingSpec(n_layers=5)
    with pytest.raises(ContractError):
        GradingSpec(growth=2.5)
    with pytest.raises(ContractError):
        GradingSpec(min_angle=10)


def test_invariants(coarse_mesh):
    rep = check_mesh(coarse_mesh)
    assert rep["positive_area"]
    assert rep["conforming"]
    assert rep["boundary_on_curve"]
    assert rep["single_loops"], rep["loops"]
    q = mesh_quality(coarse_mesh)
    assert q["min_angle"] >= 15
    assert q["growth"] <= 2.0 + 1e-9
    assert q["max_aspect"] <= 10


def test_edge_incidence_is_one_or_two(coarse_mesh):
    _, _, counts = edge_incidence(coarse_mesh.cells)
    assert set(np.unique(counts)) <= {1, 2}
    # boundary edges are exactly the edges of incidence one
    assert np.count_nonzero(counts == 1) == len(coarse_mesh.boundary_edges)


def test_every_boundary_edge_tagged_once(coarse_mesh):
    tags = coarse_mesh.boundary_tags
    assert set(np.unique(tags)) == {int(OUTER), int(INCLUSION)}
    e = np.sort(coarse_mesh.boundary_edges, axis=1)
    assert len(np.unique(e, axis=0)) == len(e)


def test_gap_layers_eps_001():
    g = disk_configuration(1.0, 0.3, 0.01)
    spec = GradingSpec(n_layers=6, far_h=0.25, boundary_angle=0.3)
    mesh = build_gap_mesh(g, spec)
    xs = np.linspace(-g.R, g.R, 25)
    assert gap_layers(mesh, xs).min() >= 6


def test_area_consistency(geom):
    mesh = build_gap_mesh(geom, GradingSpec())
    area = mesh.signed_areas().sum()
    assert abs(area - geom.area) / geom.area < 1e-3


def test_cell_count_growth_when_halving_eps():
    counts = []
    for eps in (0.04, 0.02, 0.01, 0.005):
        g = disk_configuration(1.0, 0.3, eps)
        counts.append(build_gap_mesh(g, COARSE).n_cells)
    ratios = np.array(counts[1:]) / np.array(counts[:-1])
    assert np.all(ratios <= 4.0), counts


def test_determinism(geom):
    a = build_gap_mesh(geom, COARSE)
    b = build_gap_mesh(geom, COARSE)
    assert np.array_equal(a.nodes, b.nodes)
    assert np.array_equal(a.cells, b.cells)
    assert np.array_equal(a.boundary_edges, b.boundary_edges)


def test_mesh_is_immutable(coarse_mesh):
    with pytest.raises(ValueError):
        coarse_mesh.nodes[0, 0] = 1.0


def test_mirror_symmetry(coarse_mesh):
    p = coarse_mesh.nodes
    mirrored = p * [-1, 1]
    key = lambda a: np.round(a, 12)
    s1 = set(map(tuple, key(p)))
    s2 = set(map(tuple, key(mirrored)))
    assert s1 == s2


def test_refine_uniform(coarse_mesh):
    fine = refine_uniform(coarse_mesh)
    assert fine.n_cells == 4 * coarse_mesh.n_cells
    for tag in (OUTER, INCLUSION):
        n0 = len(coarse_mesh.boundary_nodes(tag))
        assert len(fine.boundary_nodes(tag)) == 2 * n0
    rep = check_mesh(fine)
    assert rep["positive_area"] and rep["conforming"]
    assert rep["boundary_on_curve"] and rep["single_loops"]
    q0 = mesh_quality(coarse_mesh)["min_angle"]
    q1 = mesh_quality(fine)["min_angle"]
    assert q0 - q1 < 5.0
    assert fine.info["refinements"] == 1
    # geometric error shrinks
    g = coarse_mesh.geom
    e0 = abs(coarse_mesh.signed_areas().sum() - g.area)
    e1 = abs(fine.signed_areas().sum() - g.area)
    assert e1 < e0 / 3


def test_quality_failure_raises(geom):
    spec = GradingSpec(n_layers=6, far_h=0.25, boundary_angle=0.3,
                       min_angle=40.0)
    with pytest.raises(MeshQualityError) as info:
        build_gap_mesh(geom, spec, retries=1)
    assert info.value.diagnostics["min_angle"] < 40.0


def test_mesh_inclusion(coarse_mesh):
    full = mesh_inclusion(coarse_mesh)
    A = full.signed_areas()
    assert np.all(A > 0)
    g = coarse_mesh.geom
    total = g.outer.area
    assert abs(A.sum() - total) / total < 0.02
    _, _, counts = edge_incidence(full.cells)
    assert counts.max() == 2
    with pytest.raises(ContractError):
        mesh_inclusion(full)


def test_segment_samples():
    g = disk_configuration(1.0, 0.3, 0.01)
    s = segment_samples(g, 3)
    np.testing.assert_allclose(s[:, 0], 0.0)
    np.testing.assert_allclose(s[:, 1], [0.01 / 6, 0.01 / 2, 5 * 0.01 / 6])
    for m in (2, 5, 32):
        s = segment_samples(g, m)
        d = np.minimum(s[:, 1], g.eps - s[:, 1])
        assert d.min() >= g.eps / (2 * m) * (1 - 1e-12)
    with pytest.raises(ContractError):
        segment_samples(g, 1)


def test_cache_roundtrip(tmp_path, monkeypatch, geom):
    monkeypatch.setenv("LAMEGAP_CACHE_DIR", str(tmp_path))
    a = build_gap_mesh(geom, COARSE)
    files = list(tmp_path.glob("mesh-*.npz"))
    assert len(files) == 1
    b = build_gap_mesh(geom, COARSE)
    assert np.array_equal(a.nodes, b.nodes)
    assert np.array_equal(a.cells, b.cells)
    assert np.array_equal(a.boundary_tags, b.boundary_tags)
