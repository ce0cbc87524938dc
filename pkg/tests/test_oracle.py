import numpy as np
import pytest

from lamegap.errors import ContractError, OutOfWindowError
from lamegap.geometry import BoundaryData, disk_configuration
from lamegap.oracle import (check_comparison_error, check_weighted_bounds,
                            cutoff, gap_delta, sample_grid, tilde_u_alpha,
                            tilde_u_zero, vbar, vbar_grad, vbar_hessian)


def _random_gap_points(g, rng, n, window=1.0):
    xp = rng.uniform(-window * g.R, window * g.R, n)
    t = rng.uniform(0.05, 0.95, n)
    return np.column_stack([xp, g.h(xp) + t * gap_delta(g, xp)])


def _fd_jacobian(f, x, h):
    cols = []
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        cols.append((f(x + e) - f(x - e)) / (2 * h))
    return np.stack(cols, axis=-1)


def test_vbar_examples():
    g = disk_configuration(eps=0.01)
    assert vbar(g, [[0.0, 0.005]])[0] == pytest.approx(0.5, abs=1e-15)
    t = np.linspace(0.001, 0.009, 7)
    G = vbar_grad(g, np.column_stack([0 * t, t]))
    np.testing.assert_allclose(G[:, 1], 100.0, rtol=1e-14)
    np.testing.assert_allclose(G[:, 0], 0.0, atol=1e-14)
    xp = np.linspace(-2 * g.R, 2 * g.R, 21)
    np.testing.assert_allclose(vbar(g, np.column_stack([xp, g.h(xp)])), 0.0,
                               atol=1e-13)
    np.testing.assert_allclose(
        vbar(g, np.column_stack([xp, g.eps + g.h1(xp)])), 1.0, atol=1e-12)


def test_vbar_out_of_window():
    g = disk_configuration(eps=0.01)
    with pytest.raises(OutOfWindowError):
        vbar(g, [[2.1 * g.R, 0.0]])


@pytest.mark.parametrize("eps", [0.04, 0.005])
def test_vbar_gradient_finite_differences(eps, rng):
    g = disk_configuration(eps=eps)
    pts = _random_gap_points(g, rng, 100)
    G = vbar_grad(g, pts)
    for p, gp in zip(pts, G):
        h = 1e-4 * eps
        fd = _fd_jacobian(lambda x: vbar(g, x[None])[0], p, h)
        assert np.linalg.norm(gp - fd) <= 1e-6 * np.linalg.norm(gp)


def test_vbar_hessian_finite_differences(rng):
    g = disk_configuration(eps=0.02)
    pts = _random_gap_points(g, rng, 30)
    H = vbar_hessian(g, pts)
    assert np.all(H[:, 1, 1] == 0.0)
    for p, hp in zip(pts, H):
        fd = _fd_jacobian(lambda x: vbar_grad(g, x[None])[0], p, 1e-6)
        assert np.linalg.norm(hp - fd) <= 1e-5 * np.linalg.norm(hp) + 1e-6


def test_vbar_bound_sandwich():
    # constant from the convexity constants
    for eps in (0.04, 0.01, 0.0025):
        g = disk_configuration(eps=eps)
        C = 2.0 * max(1.0, g.kappa2, 2.0 / g.kappa1)
        pts = sample_grid(g)
        xp = pts[:, 0]
        w = g.eps + xp ** 2
        G = vbar_grad(g, pts)
        assert np.all(np.abs(G[:, 1]) >= 1 / (C * w))
        assert np.all(np.abs(G[:, 1]) <= C / w)
        assert np.all(np.abs(G[:, 0]) <= C * np.abs(xp) / w + 1e-12)


def test_mixed_derivative_bound_trend():
    vals = []
    for eps in (0.04, 0.02, 0.01, 0.005, 0.0025):
        g = disk_configuration(eps=eps)
        pts = sample_grid(g)
        xp = pts[:, 0]
        off = np.abs(xp) > 0
        H = vbar_hessian(g, pts[off])
        w = g.eps + xp[off] ** 2
        vals.append(np.max(np.abs(H[:, 0, 1]) * w ** 2 / np.abs(xp[off])))
    vals = np.array(vals)
    assert np.all(np.isfinite(vals))
    assert vals.max() / vals.min() < 2.0


def test_cutoff():
    g = disk_configuration(eps=0.01)
    r = np.linspace(0, 2.5 * g.R, 301)
    c = cutoff(g, r)
    assert np.all((c >= 0) & (c <= 1))
    np.testing.assert_array_equal(c[r <= 1.5 * g.R], 1.0)
    np.testing.assert_array_equal(c[r >= 2.0 * g.R], 0.0)
    x = np.linspace(1.5 * g.R, 2 * g.R, 21)[1:-1]
    h = 1e-7
    fd = (cutoff(g, x + h) - cutoff(g, x - h)) / (2 * h)
    np.testing.assert_allclose(cutoff(g, x, 1), fd, rtol=1e-6)
    np.testing.assert_allclose(cutoff(g, -x, 1), -fd, rtol=1e-6)


def test_tilde_u_alpha():
    g = disk_configuration(eps=0.01)
    val, grad = tilde_u_alpha(g, 1, [[0.0, 0.005]])
    np.testing.assert_allclose(val, [[0.5, 0.0]], atol=1e-15)
    pts = _random_gap_points(g, np.random.default_rng(0), 10)
    val, grad = tilde_u_alpha(g, 1, pts)
    np.testing.assert_array_equal(grad[:, 0], vbar_grad(g, pts))
    np.testing.assert_array_equal(grad[:, 1], 0.0)
    xp = np.linspace(-g.R, g.R, 9)
    top = np.column_stack([xp, g.eps + g.h1(xp)])
    bot = np.column_stack([xp, g.h(xp)])
    for a in (1, 2):
        e = np.eye(2)[a - 1]
        np.testing.assert_allclose(tilde_u_alpha(g, a, top)[0],
                                   np.tile(e, (9, 1)), atol=1e-12)
        np.testing.assert_allclose(tilde_u_alpha(g, a, bot)[0], 0, atol=1e-12)
    with pytest.raises(ContractError):
        tilde_u_alpha(g, 3, pts)


def test_tilde_u_zero():
    g = disk_configuration(eps=0.01)
    const = BoundaryData.preset("constant", (2.0, 3.0))
    pts = _random_gap_points(g, np.random.default_rng(1), 20, window=2.0)
    for l in (1, 2):
        v, G = tilde_u_zero(g, const, l, pts)
        assert np.all(v == 0) and np.all(G == 0)
    phi = BoundaryData.from_coefficients([[[0, 1, 1.0], [2, 0, 0.5]],
                                          [[1, 0, 2.0], [1, 1, -1.0]]])
    xp = np.linspace(-2 * g.R, 2 * g.R, 41)
    bot = np.column_stack([xp, g.h(xp)])
    top = np.column_stack([xp, g.eps + g.h1(xp)])
    for l in (1, 2):
        np.testing.assert_allclose(tilde_u_zero(g, phi, l, bot)[0][:, l - 1],
                                   (phi(bot) - phi.phi_at_P)[:, l - 1],
                                   atol=1e-12)
        np.testing.assert_allclose(tilde_u_zero(g, phi, l, top)[0], 0.0,
                                   atol=1e-12)
    t = np.linspace(0.001, 0.009, 5)
    v, _ = tilde_u_zero(g, phi, 1, np.column_stack([0 * t, t]))
    np.testing.assert_allclose(v, 0.0, atol=1e-15)
    with pytest.raises(ContractError):
        tilde_u_zero(g, phi, 3, top)


def test_tilde_u_zero_gradient_finite_differences(rng):
    g = disk_configuration(eps=0.02)
    phi = BoundaryData.from_coefficients([[[0, 1, 1.0], [2, 0, 0.5]],
                                          [[1, 0, 2.0], [1, 1, -1.0]]])
    # include the cutoff ramp region
    pts = _random_gap_points(g, rng, 40, window=1.95)
    for l in (1, 2):
        _, G = tilde_u_zero(g, phi, l, pts)
        for p, gp in zip(pts, G):
            fd = _fd_jacobian(lambda x: tilde_u_zero(g, phi, l, x[None])[0][0],
                              p, 1e-7)
            assert np.linalg.norm(gp - fd) <= 1e-6 * max(1, np.linalg.norm(gp))


def test_sample_grid():
    g = disk_configuration(eps=0.01)
    pts = sample_grid(g)
    assert pts.shape == (41 * 12, 2)
    assert np.any(pts[:, 0] == 0.0)
    assert np.abs(pts[:, 0]).max() <= g.R * (1 + 1e-15)
    v = vbar(g, pts)
    assert np.all((v > 0) & (v < 1))
    with pytest.raises(ContractError):
        sample_grid(g, n_x=40)


def test_oracle_checks_finite(coarse_aux, geom):
    r = check_comparison_error(coarse_aux.u_alpha[0], 1, geom)
    c = check_comparison_error(coarse_aux.u_alpha[0], 1, geom, control=True)
    assert r["finite"] and c["finite"]
    assert r["max"] < c["max"]
    b = check_weighted_bounds(coarse_aux, geom)
    assert b["finite"]
    for k in ("u_1", "u_2", "u_3", "u_0"):
        assert np.isfinite(b[k])
