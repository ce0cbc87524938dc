"""Acceptance suite on the reference configuration (configs/reference.toml).

Each criterion prints one ``PASS``/``FAIL`` line; the lines are repeated in
the terminal summary.  Criteria that do not hold on the reference sweep are
kept literal and marked ``xfail(strict=True)``.
"""
import os
from dataclasses import replace

import numpy as np
import pytest

from lamegap.asymptotics import fit_smallest, run_sweep
from lamegap.config import load_config
from lamegap.decomposition import decompose, inclusion_tractions, monolithic_solve
from lamegap.fem import surface_traction
from lamegap.geometry import (BoundaryData, MaterialParams, disk_configuration,
                              rigid_basis)
from lamegap.mesh import (INCLUSION, build_gap_mesh, mesh_inclusion,
                          refine_uniform)
from lamegap.verify import COARSE, ellipticity_sandwich, kernel_count, patch_test

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
REFERENCE = os.path.join(ROOT, "configs", "reference.toml")
JOBS = max(2, min(5, os.cpu_count() or 1))
ZERO = 1e-9  # relative floor for entries that vanish by mirror symmetry

REPORT = []


def report(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {n:>2}: {detail}"
    print(line)
    REPORT.append(line)
    return ok


def varies_less(vals, factor, scale):
    """max/min of ``|vals|`` below ``factor``; a sequence entirely under the
    zero floor counts as constant."""
    v = np.abs(np.asarray(vals, dtype=float))
    if v.max() <= ZERO * scale:
        return True, 1.0
    if v.min() == 0.0:
        return False, np.inf
    r = float(v.max() / v.min())
    return r < factor, r


def diffs(vals):
    v = np.asarray(vals, dtype=float)
    return np.abs(np.diff(v))


@pytest.fixture(scope="module")
def cfg():
    return load_config(REFERENCE)


@pytest.fixture(scope="module")
def sweep(cfg):
    res = run_sweep(cfg.sweep_params(), cfg.sweep.eps, jobs=JOBS)
    assert not res.failures
    assert len(res.records) == len(cfg.sweep.eps)
    return res


@pytest.fixture(scope="module")
def cols(sweep):
    out = {k: sweep.column(k) for k in sweep.rows[0]}
    out["X"] = np.array([r["X"] for r in sweep.records])
    out["b"] = np.array([r["b"] for r in sweep.records])
    out["C"] = np.array([r["C"] for r in sweep.records])
    out["a"] = np.array([r["a"] for r in sweep.records])
    return out


def test_criterion_01_blowup_rate(sweep, cols):
    fit = sweep.fit("max_grad_segment", n=4)
    g = cols["max_grad_segment"]
    increasing = bool(np.all(np.diff(g) > 0))
    ok = -0.60 <= fit.slope <= -0.40 and fit.r_squared >= 0.98 and increasing
    report(1, ok, f"max_grad_segment slope {fit.slope:.4f} "
                  f"(want [-0.60, -0.40]), r2 {fit.r_squared:.5f} (>= 0.98), "
                  f"strictly increasing {increasing}")
    assert ok


def test_criterion_02_gram_scaling(sweep, cols):
    f11 = sweep.fit("a_11", n=4)
    f22 = sweep.fit("a_22", n=4)
    scale = np.abs(cols["a"]).max()
    ok33, r33 = varies_less(cols["a_33"], 3, scale)
    ok13, r13 = varies_less(cols["a_13"], 3, scale)
    ok23, r23 = varies_less(cols["a_23"], 3, scale)
    a12 = cols["a_12"]
    eps = cols["eps"]
    ok_log, r_log = varies_less(a12 / np.log(1 / eps), 3, scale)
    d12 = diffs(a12)
    # logarithmic growth keeps halving-differences roughly constant;
    # "exploding" means a difference more than doubles from one pair to the next
    ok_d = bool(np.all(d12 <= ZERO * scale)
                or np.all(d12[1:] <= 2 * d12[:-1] + ZERO * scale))
    ok = (-0.60 <= f11.slope <= -0.40 and -0.60 <= f22.slope <= -0.40
          and ok33 and ok13 and ok23 and ok_log and ok_d)
    report(2, ok, f"slopes a_11 {f11.slope:.4f}, a_22 {f22.slope:.4f}; "
                  f"variation a_33 {r33:.3f}, |a_13| {r13:.3f}, |a_23| {r23:.3f}"
                  f", |a_12|/log(1/eps) {r_log:.3f} (max |a_12| "
                  f"{np.abs(a12).max():.2e})")
    assert ok


@pytest.mark.xfail(strict=True, reason="|C^2| must move by >= 2.3x for the "
                   "slope clause but by < 3x overall; the data give 4.6x")
def test_criterion_03_coefficient_convergence(sweep, cols):
    diff2 = np.abs(cols["X"][:, 1])
    fit = fit_smallest(cols["eps"], diff2, n=4)
    scale = np.abs(cols["C"]).max()
    checks = [varies_less(cols["C"][:, k], 3, scale) for k in range(3)]
    ok = fit.slope >= 0.40 and all(c for c, _ in checks)
    report(3, ok, f"slope |C^2 - phi^2(P)| {fit.slope:.4f} (>= 0.40); "
                  "variation |C^a| " + ", ".join(f"{r:.3f}" for _, r in checks)
                  + " (< 3)")
    assert ok


@pytest.mark.xfail(strict=True, reason="b_2 is non-monotone in eps on the "
                   "reference range; differences grow before they decay")
def test_criterion_04_load_convergence(cols):
    b = cols["b"]
    scale = np.abs(b).max()
    bounded = [varies_less(b[:, k], 3, scale) for k in range(3)]
    mono = []
    for k in range(3):
        d = diffs(b[:, k])[-3:]
        mono.append(bool(np.all(d <= ZERO * scale))
                    or bool(np.all(np.diff(d) <= 0)))
    ok = all(c for c, _ in bounded) and all(mono)
    d2 = diffs(b[:, 1])[-3:]
    report(4, ok, "variation |b_b| " + ", ".join(f"{r:.3f}" for _, r in bounded)
                  + " (< 3); b_2 differences on 3 smallest pairs "
                  + ", ".join(f"{x:.4f}" for x in d2)
                  + f" nonincreasing per component {mono}")
    assert ok


def test_criterion_05_positivity(cols):
    lam = cols["min_eig_block"]
    ratio = lam / lam[0]
    ok = bool(np.all(ratio > 0.1))
    report(5, ok, "min eigenvalue / value at eps=0.04: "
                  + ", ".join(f"{r:.3f}" for r in ratio) + " (> 0.1)")
    assert ok


def test_criterion_06_oracle_equivalence():
    geom = disk_configuration(1.0, 0.3, 0.04)
    mat = MaterialParams(1.0, 1.0)
    phi = BoundaryData.preset("vertical_shear")
    mesh = build_gap_mesh(geom, COARSE)
    res = decompose(mesh, mat, geom, phi)
    mono = monolithic_solve(mesh_inclusion(mesh), mat, phi)
    rel = abs(mono.energy - res.energy) / res.energy
    amp = float(np.abs(mono.amplitudes - res.coeffs.X).max())
    ok = rel <= 1e-8 and amp <= 1e-6
    report(6, ok, f"energy relative difference {rel:.2e} (<= 1e-8), rigid "
                  f"amplitudes max difference {amp:.2e} (<= 1e-6)")
    assert ok


@pytest.mark.xfail(strict=True, reason="the consistent-flux residual is zero "
                   "to round-off before and after refinement; nothing to halve")
def test_criterion_07_traction_residual(cfg):
    geom = disk_configuration(1.0, 0.3, 0.02)
    mat = MaterialParams(1.0, 1.0)
    phi = cfg.phi()
    mesh = build_gap_mesh(geom, cfg.grading())
    fine = refine_uniform(mesh)
    r0 = decompose(mesh, mat, geom, phi)
    r1 = decompose(fine, mat, geom, phi)
    t0 = np.abs(inclusion_tractions(r0.u, r0.aux.K))
    t1 = np.abs(inclusion_tractions(r1.u, r1.aux.K))
    s0 = np.array([abs(surface_traction(r0.u, mat, INCLUSION, p))
                   for p in rigid_basis(2)])
    s1 = np.array([abs(surface_traction(r1.u, mat, INCLUSION, p))
                   for p in rigid_basis(2)])
    ok = bool(np.all(t0 >= 2 * t1))
    report(7, ok, "consistent flux |t| coarse " + ", ".join(f"{x:.1e}" for x in t0)
                  + ", refined " + ", ".join(f"{x:.1e}" for x in t1)
                  + "; direct surface ratio " + ", ".join(
                      f"{a / b:.2f}" if b > 0 else "inf" for a, b in zip(s0, s1))
                  + " (need >= 2 for every mode)")
    assert ok


def test_criterion_08_interior_boundedness(cols):
    scale = np.abs(cols["C"]).max()
    ok, r = varies_less(cols["inclusion_grad_norm"], 2, scale)
    report(8, ok, f"inclusion_grad_norm variation {r:.3f} (< 2), max "
                  f"{cols['inclusion_grad_norm'].max():.2e}")
    assert ok


@pytest.mark.xfail(strict=True, reason="the maximum sits at the window edge "
                   "and has not saturated on the reference eps range")
def test_criterion_09_auxiliary_discrepancy(sweep, cols):
    eps = cols["eps"]
    m = [r["oracle_checks"]["comparison_error"]["max"] for r in sweep.records]
    c = [r["oracle_checks"]["comparison_error_control"]["max"]
         for r in sweep.records]
    fit = fit_smallest(eps, m, n=4)
    ctl = fit_smallest(eps, c, n=4)
    ok = -0.15 <= fit.slope <= 0.15 and ctl.slope <= -0.35
    report(9, ok, f"slope with comparison field {fit.slope:.4f} "
                  f"(want [-0.15, 0.15]); control slope {ctl.slope:.4f} "
                  "(<= -0.35)")
    assert ok


def test_criterion_10_verification_suite(cfg, sweep):
    mat = MaterialParams(1.0, 1.0)
    mesh = build_gap_mesh(disk_configuration(1.0, 0.3, 0.04), COARSE)
    perr = patch_test(mesh, mat)
    nk = kernel_count(mesh, mat)
    ell = ellipticity_sandwich(mat, n=100)
    serial = run_sweep(cfg.sweep_params(), cfg.sweep.eps, jobs=1)
    worst = 0.0
    for r1, r2 in zip(serial.rows, sweep.rows):
        for k in r1:
            worst = max(worst, abs(float(r1[k]) - float(r2[k])))
    ok = perr <= 1e-10 and nk == 3 and ell["ok"] and worst <= 1e-12
    report(10, ok, f"patch error {perr:.1e} (<= 1e-10), kernel count {nk}, "
                   f"ellipticity ok {ell['ok']}, jobs=1 vs jobs={JOBS} max "
                   f"difference {worst:.1e} (<= 1e-12)")
    assert ok


def test_info_nonsymmetric_data(cfg):
    # phi = (x2, x2) breaks the mirror symmetry so every b, C entry is live
    phi = BoundaryData.from_coefficients([[[0, 1, 1.0]], [[0, 1, 1.0]]])
    params = replace(cfg.sweep_params(), phi=phi, oracle=False)
    res = run_sweep(params, cfg.sweep.eps[:3], jobs=JOBS)
    b = np.array([r["b"] for r in res.records])
    C = np.array([r["C"] for r in res.records])
    line = ("INFO  phi=(x2, x2): b_1 " + ", ".join(f"{x:.4f}" for x in b[:, 0])
            + "; C_1 " + ", ".join(f"{x:.4f}" for x in C[:, 0])
            + "; C_3 " + ", ".join(f"{x:.2e}" for x in C[:, 2]))
    print(line)
    REPORT.append(line)
    assert np.all(np.isfinite(b)) and np.all(np.isfinite(C))
