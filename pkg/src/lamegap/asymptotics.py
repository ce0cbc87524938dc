"""Rate models, epsilon sweeps, rate fits and limit extrapolation."""
from __future__ import annotations

import enum
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ContractError, LamegapError
from .geometry import (BoundaryData, MaterialParams, disk_configuration,
                       gap_width)
from .mesh import GradingSpec, build_gap_mesh, refine_uniform, segment_samples

log = logging.getLogger(__name__)

CSV_COLUMNS = ("eps", "max_grad_segment", "a_11", "a_12", "a_13", "a_22",
               "a_23", "a_33", "b_1", "b_2", "b_3", "C_1", "C_2", "C_3",
               "min_eig_block", "inclusion_grad_norm", "cells",
               "solve_residual")

PROFILE_OFFSETS = (0.0, 0.5, 1.0, 2.0, 4.0, 10.0)


def rho_d(eps, d: int):
    """``sqrt(eps)`` for d=2, ``1/|log eps|`` for d=3 and 1 for d>=4."""
    e = np.asarray(eps, dtype=float)
    if np.any(e <= 0) or np.any(e >= 0.5):
        raise ContractError("eps must lie in (0, 1/2)")
    if int(d) != d or d < 2:
        raise ContractError("dimension must be an integer >= 2")
    if d == 2:
        out = np.sqrt(e)
    elif d == 3:
        out = 1.0 / np.abs(np.log(e))
    else:
        out = np.ones_like(e)
    return float(out) if out.ndim == 0 else out


def gamma_d(d: int) -> float:
    """Extrapolation exponent for the loads ``b_beta``."""
    if d < 2:
        raise ContractError("dimension must be >= 2")
    return 1.0 / 6.0 if d == 2 else (d - 2) / (2.0 * (d - 1))


class RateKind(enum.Enum):
    PURE_POWER = "pure"
    POWER_WITH_LOG = "rho"


@dataclass(frozen=True)
class RateModel:
    d: int = 2

    @property
    def kind(self):
        return RateKind.POWER_WITH_LOG if self.d == 3 else RateKind.PURE_POWER

    def rho(self, eps):
        return rho_d(eps, self.d)

    def blowup(self, eps):
        """Model gradient scale ``rho_d(eps) / eps``."""
        return self.rho(eps) / np.asarray(eps, dtype=float)


@dataclass
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    model: str
    points: list
    quantity: str = ""

    def to_dict(self):
        return {"quantity": self.quantity, "slope": self.slope,
                "intercept": self.intercept, "r2": self.r_squared,
                "points": self.points}


def fit_rate(xs, ys, model="pure", d=2, quantity="") -> RateFit:
    """Least squares line through ``log y`` against ``log eps`` (``pure``)
    or against ``log(rho_d(eps)/eps)`` (``rho``)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.size < 3:
        raise ContractError("fit_rate needs at least 3 matching points")
    if np.any(ys <= 0) or np.any(xs <= 0):
        raise ContractError("fit_rate needs positive data")
    if isinstance(model, RateModel):
        d = model.d
        model = "rho"
    if model == "pure":
        X = np.log(xs)
    elif model == "rho":
        X = np.log(RateModel(d).blowup(xs))
    else:
        raise ContractError(f"unknown rate model {model!r}")
    Y = np.log(ys)
    A = np.column_stack([X, np.ones_like(X)])
    (slope, icpt), *_ = np.linalg.lstsq(A, Y, rcond=None)
    resid = Y - A @ np.array([slope, icpt])
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    if ss_tot > 0 and ss_res <= 1e-28 * ss_tot:
        r2 = 1.0
    pts = [[float(a), float(b)] for a, b in zip(xs, ys)]
    return RateFit(float(slope), float(icpt), float(r2), model, pts, quantity)


def fit_smallest(xs, ys, n=4, **kw) -> RateFit:
    """Fit on the ``n`` smallest eps values."""
    xs = np.asarray(xs, dtype=float)
    order = np.argsort(xs)[:n]
    return fit_rate(xs[order], np.asarray(ys, dtype=float)[order], **kw)


@dataclass
class BStarEstimate:
    b_star: np.ndarray
    gamma: float
    slope_coef: np.ndarray
    residual: np.ndarray
    uncertainty: np.ndarray
    free_gamma: list
    eps: np.ndarray
    table: np.ndarray

    def to_dict(self):
        return {"b_star": self.b_star.tolist(), "gamma": self.gamma,
                "c": self.slope_coef.tolist(),
                "residual": self.residual.tolist(),
                "uncertainty": self.uncertainty.tolist(),
                "free_gamma": self.free_gamma,
                "eps": self.eps.tolist(), "b": self.table.tolist()}


def _fit_limit(eps, y, gamma):
    A = np.column_stack([np.ones_like(eps), eps ** gamma])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    n = len(y)
    ss = float(r @ r)
    sigma2 = ss / (n - 2) if n > 2 else 0.0
    cov = sigma2 * np.linalg.inv(A.T @ A)
    return coef, np.sqrt(ss / n), float(np.sqrt(max(cov[0, 0], 0.0)))


def estimate_bstar(table, d=2, gamma=None) -> BStarEstimate:
    """Extrapolate each load component with ``b = b* + c eps^gamma``.

    ``table`` maps eps to load vectors (or is a pair ``(eps, B)``).  The
    uncertainty is the least-squares standard error of ``b*``; a fit with
    free exponent is reported as a diagnostic.
    """
    if isinstance(table, dict):
        eps = np.array(sorted(table, reverse=True), dtype=float)
        B = np.array([np.asarray(table[e], dtype=float) for e in eps])
    else:
        eps, B = (np.asarray(a, dtype=float) for a in table)
    if len(eps) < 3:
        raise ContractError("estimate_bstar needs at least 3 eps values")
    B = B.reshape(len(eps), -1)
    g = gamma_d(d) if gamma is None else float(gamma)
    scale = max(1.0, float(np.abs(B).max()))
    bstar, cs, res, unc, free = [], [], [], [], []
    for k in range(B.shape[1]):
        y = B[:, k]
        coef, r, u = _fit_limit(eps, y, g)
        bstar.append(coef[0])
        cs.append(coef[1])
        res.append(r)
        unc.append(u)
        free.append(_free_gamma(eps, y, scale))
    return BStarEstimate(np.array(bstar), g, np.array(cs), np.array(res),
                         np.array(unc), free, eps, B)


def _free_gamma(eps, y, scale=1.0):
    # components that are flat to round-off carry no exponent information
    if np.ptp(y) <= 1e-10 * scale:
        return {"gamma": None, "b_star": float(np.mean(y)), "residual": 0.0}

    def cost(gm):
        return _fit_limit(eps, y, gm)[1]

    opt = minimize_scalar(cost, bounds=(0.02, 3.0), method="bounded",
                          options={"xatol": 1e-6})
    coef, r, _ = _fit_limit(eps, y, opt.x)
    return {"gamma": float(opt.x), "b_star": float(coef[0]),
            "residual": float(r)}


@dataclass
class PredicateResult:
    expected: bool
    condition: str | None
    k0: int | None
    details: dict = field(default_factory=dict)


def blow_up_predicate(d: int, bstar, grad_phi=None, tol=1e-8,
                      grad_tol=None) -> PredicateResult:
    """Status of the blow-up conditions on the limit loads.

    Only the translation components ``1..d`` of ``bstar`` enter.  ``tol``
    is a scalar or per-component band for the zero tests of ``b*``;
    ``grad_phi`` holds the tangential gradient rows of ``phi`` at P
    (needed for d=2).  ``k0`` is 1-based.
    """
    b = np.asarray(bstar, dtype=float)[:d]
    tol = np.asarray(tol, dtype=float)
    if tol.ndim:
        tol = tol[:d]
    tolv = np.broadcast_to(tol, b.shape)
    nonzero = np.abs(b) > tolv
    details = {"b_translation": b.tolist(), "tol": tolv.tolist(),
               "nonzero": nonzero.tolist()}
    if d == 2:
        if grad_phi is None:
            raise ContractError("d=2 needs the tangential gradient of phi")
        gtol = float(np.max(tolv)) if grad_tol is None else float(grad_tol)
        gn = np.linalg.norm(np.asarray(grad_phi, dtype=float)
                            .reshape(d, -1), axis=1)
        details["grad_norm"] = gn.tolist()
        for k in range(d):
            if nonzero[k] and gn[k] <= gtol:
                return PredicateResult(True, "i", k + 1, details)
        return PredicateResult(False, None, None, details)
    if d == 3:
        hits = np.nonzero(nonzero)[0]
        if hits.size:
            return PredicateResult(True, "ii", int(hits[0]) + 1, details)
        return PredicateResult(False, None, None, details)
    hits = np.nonzero(nonzero)[0]
    if hits.size == 1:
        return PredicateResult(True, "iii", int(hits[0]) + 1, details)
    return PredicateResult(False, None, None, details)


# ---------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class SweepParams:
    outer_radius: float = 1.0
    inclusion_radius: float = 0.3
    lam: float = 1.0
    mu: float = 1.0
    phi: BoundaryData = BoundaryData.preset("vertical_shear")
    grading: GradingSpec = GradingSpec()
    refinements: int = 0
    segment_points: int = 32
    oracle: bool = True


def solve_single(params: SweepParams, eps: float) -> dict:
    """Full pipeline at one eps; returns the JSON-ready result record."""
    from .decomposition import decompose, inclusion_tractions
    from .oracle import check_comparison_error, check_weighted_bounds

    t0 = time.perf_counter()
    geom = disk_configuration(params.outer_radius, params.inclusion_radius,
                              eps)
    mat = MaterialParams(params.lam, params.mu)
    mesh = build_gap_mesh(geom, params.grading)
    for _ in range(params.refinements):
        mesh = refine_uniform(mesh)
    t1 = time.perf_counter()
    res = decompose(mesh, mat, geom, params.phi)
    t2 = time.perf_counter()
    u = res.u
    seg = segment_samples(geom, params.segment_points)
    grad_seg = u.gradient_norm(seg)
    profile = grad_profile(u, geom, params.segment_points)
    a, b, C = res.block.a, res.block.b, res.coeffs.C
    rec = {
        "eps": float(eps),
        "max_grad_segment": float(grad_seg.max()),
        "grad_profile": profile,
        "a": a.tolist(),
        "b": b.tolist(),
        "C": C.tolist(),
        "X": res.coeffs.X.tolist(),
        "min_eig_block": res.block.min_eig(),
        "inclusion_grad_norm": float(np.sqrt(2.0) * abs(C[2])),
        "energy": res.energy,
        "tractions": inclusion_tractions(u, res.aux.K).tolist(),
        "solve_residual": float(max(res.aux.solve_residual,
                                    res.coeffs.residual)),
        "mesh": {"cells": int(mesh.n_cells), "nodes": int(mesh.n_nodes),
                 "dofs": int(res.aux.dofs.n_dofs),
                 "n_sigma": mesh.info.get("n_sigma"),
                 "max_level": mesh.info.get("max_level")},
        "geometry": geom.describe(),
        "phi": params.phi.to_dict(),
    }
    if params.oracle:
        u1 = res.aux.u_alpha[0]
        rec["oracle_checks"] = {
            "comparison_error": check_comparison_error(u1, 1, geom),
            "comparison_error_control": check_comparison_error(
                u1, 1, geom, control=True),
            "weighted_bounds": check_weighted_bounds(res.aux, geom),
        }
    rec["timings"] = {"mesh": t1 - t0, "solve": t2 - t1,
                      "post": time.perf_counter() - t2}
    return rec


def grad_profile(u, geom, m=16, offsets=PROFILE_OFFSETS) -> dict:
    """Max of ``|grad u|`` across the gap at lateral offsets
    ``c * sqrt(eps)`` (clipped to the window)."""
    xs, vals = [], []
    for c in offsets:
        xp = min(c * np.sqrt(geom.eps), geom.R)
        lo = float(geom.h(xp))
        width = float(gap_width(geom, xp))
        t = lo + width * (np.arange(m) + 0.5) / m
        pts = np.column_stack([np.full(m, xp), t])
        xs.append(float(xp))
        vals.append(float(u.gradient_norm(pts).max()))
    return {"offsets": xs, "values": vals}


def record_to_row(rec: dict) -> dict:
    a, b, C = np.asarray(rec["a"]), rec["b"], rec["C"]
    row = {"eps": rec["eps"], "max_grad_segment": rec["max_grad_segment"]}
    for i, j in ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)):
        row[f"a_{i + 1}{j + 1}"] = float(a[i, j])
    for k in range(3):
        row[f"b_{k + 1}"] = float(b[k])
    for k in range(3):
        row[f"C_{k + 1}"] = float(C[k])
    row["min_eig_block"] = rec["min_eig_block"]
    row["inclusion_grad_norm"] = rec["inclusion_grad_norm"]
    row["cells"] = rec["mesh"]["cells"]
    row["solve_residual"] = rec["solve_residual"]
    return row


@dataclass
class SweepResult:
    records: list
    failures: list
    params: SweepParams | None = None

    @property
    def rows(self):
        return [record_to_row(r) for r in self.records]

    @property
    def eps(self):
        return np.array([r["eps"] for r in self.records])

    def column(self, name):
        return np.array([row[name] for row in self.rows], dtype=float)

    def fit(self, quantity, n=4, model="pure"):
        return fit_smallest(self.eps, np.abs(self.column(quantity)), n=n,
                            model=model, quantity=quantity)


def _job(args):
    params, eps = args
    try:
        return eps, solve_single(params, eps), None
    except LamegapError as exc:
        return eps, None, f"{type(exc).__name__}: {exc}"


def run_sweep(params: SweepParams, eps_list, jobs=1) -> SweepResult:
    """Solve every eps (independent jobs); failed rows are recorded and the
    sweep continues.  Results are ordered by decreasing eps regardless of
    the number of workers."""
    eps_list = [float(e) for e in eps_list]
    if any(e2 >= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise ContractError("eps list must be strictly decreasing")
    for e in eps_list:
        rho_d(e, 2)
    tasks = [(params, e) for e in eps_list]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(_job, tasks))
    else:
        out = [_job(t) for t in tasks]
    records, failures = [], []
    for eps, rec, err in out:
        if rec is None:
            log.warning("row eps=%g failed: %s", eps, err)
            failures.append({"eps": eps, "error": err})
        else:
            records.append(rec)
    records.sort(key=lambda r: -r["eps"])
    return SweepResult(records, failures, params)


def profile_check(records, d=2) -> dict:
    """Ratio of the sampled gradient profile to the pointwise envelope
    ``rho/(eps + x'^2) + |x'|/(eps + x'^2) + 1``; flags growth of the max
    ratio by more than a factor 2 across the sweep."""
    per_row = []
    for rec in records:
        eps = rec["eps"]
        xp = np.abs(np.asarray(rec["grad_profile"]["offsets"]))
        g = np.asarray(rec["grad_profile"]["values"])
        env = (rho_d(eps, d) + xp) / (eps + xp ** 2) + 1.0
        ratio = g / env
        per_row.append({"eps": eps, "ratios": ratio.tolist(),
                        "max_ratio": float(ratio.max()),
                        "centre_dominates": bool(g[0] >= g[1:].max())})
    maxima = np.array([r["max_ratio"] for r in per_row])
    growth = float(maxima.max() / maxima[0]) if len(maxima) else 1.0
    return {"rows": per_row, "growth": growth, "flag": bool(growth > 2.0),
            "finite": bool(np.all(np.isfinite(maxima)))}
