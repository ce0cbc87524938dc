"""Closed-form comparison fields in the thin gap and bound checks.

``vbar`` is the linear interpolant across the gap between the two boundary
graphs: 0 on the outer boundary, 1 on the inclusion.  The translation
comparison fields are ``vbar * e_alpha`` and the outer-data comparison field
transports ``phi - phi(P)`` from the lower graph across the gap.

Indices ``alpha`` and ``l`` are 1-based here, as in the column names of the
sweep table.
"""
from __future__ import annotations

import numpy as np

from .errors import ContractError, OutOfWindowError
from .geometry import BoundaryData, GapGeometry


def _split(geom: GapGeometry, x, window=2.0):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    xp, xd = x[:, 0], x[:, 1]
    if np.any(np.abs(xp) > window * geom.R * (1 + 1e-12)):
        raise OutOfWindowError(
            f"|x'| exceeds {window:g}R = {window * geom.R:.4g}")
    return xp, xd


def gap_delta(geom: GapGeometry, xprime, order=0):
    """``delta(x') = eps + h1(x') - h(x')`` and its derivatives."""
    xp = np.asarray(xprime, dtype=float)
    base = geom.eps if order == 0 else 0.0
    return base + geom.h1(xp, order) - geom.h(xp, order)


def vbar(geom: GapGeometry, x):
    xp, xd = _split(geom, x)
    return (xd - geom.h(xp)) / gap_delta(geom, xp)


def vbar_grad(geom: GapGeometry, x):
    """Exact gradient, shape (n, 2)."""
    xp, xd = _split(geom, x)
    d = gap_delta(geom, xp)
    d1 = gap_delta(geom, xp, 1)
    v = (xd - geom.h(xp)) / d
    g = np.empty((len(xp), 2))
    g[:, 0] = -geom.h(xp, 1) / d - v * d1 / d
    g[:, 1] = 1.0 / d
    return g


def vbar_hessian(geom: GapGeometry, x):
    """Exact Hessian, shape (n, 2, 2); the ``x_d x_d`` entry vanishes."""
    xp, xd = _split(geom, x)
    d = gap_delta(geom, xp)
    d1 = gap_delta(geom, xp, 1)
    d2 = gap_delta(geom, xp, 2)
    h1_, h2_ = geom.h(xp, 1), geom.h(xp, 2)
    w = xd - geom.h(xp)
    H = np.zeros((len(xp), 2, 2))
    H[:, 0, 0] = (-h2_ / d + 2 * h1_ * d1 / d ** 2 - w * d2 / d ** 2
                  + 2 * w * d1 ** 2 / d ** 3)
    H[:, 0, 1] = H[:, 1, 0] = -d1 / d ** 2
    return H


def cutoff(geom: GapGeometry, xprime, order=0):
    """Quintic ramp: 1 for ``|x'| <= 3R/2``, 0 for ``|x'| >= 2R``.

    ``order=1`` returns the derivative with respect to ``x'``.
    """
    xp = np.asarray(xprime, dtype=float)
    r = np.abs(xp)
    s = np.clip((r - 1.5 * geom.R) / (0.5 * geom.R), 0.0, 1.0)
    if order == 0:
        return 1.0 - s ** 3 * (10 - 15 * s + 6 * s * s)
    ds = 30 * s ** 2 * (1 - s) ** 2 / (0.5 * geom.R)
    return -ds * np.sign(xp)


def tilde_u_alpha(geom: GapGeometry, alpha: int, x):
    """``vbar * e_alpha`` and its gradient (n, 2, 2) for a translation."""
    if alpha not in (1, 2):
        raise ContractError(
            "comparison field defined for translations alpha = 1..d only")
    v = vbar(geom, x)
    g = vbar_grad(geom, x)
    val = np.zeros((len(v), 2))
    val[:, alpha - 1] = v
    grad = np.zeros((len(v), 2, 2))
    grad[:, alpha - 1, :] = g
    return val, grad


def tilde_u_zero(geom: GapGeometry, phi: BoundaryData, l: int, x):
    """Outer-data comparison field for component ``l`` and its gradient.

    Inside ``|x'| <= 3R/2`` the data is frozen along verticals from the
    lower graph; the cutoff blends it into ``phi(x) - phi(P)``.
    """
    if l not in (1, 2):
        raise ContractError("component index must be 1 or 2")
    xp, xd = _split(geom, x)
    x = np.column_stack([xp, xd])
    k = l - 1
    phiP = phi.phi_at_P[k]
    lower = np.column_stack([xp, geom.h(xp)])
    A = phi(lower)[:, k] - phiP
    gl = phi.grad(lower)[:, k, :]
    dA = gl[:, 0] + gl[:, 1] * geom.h(xp, 1)
    B = phi(x)[:, k] - phiP
    dB = phi.grad(x)[:, k, :]
    rho = cutoff(geom, xp)
    drho = cutoff(geom, xp, 1)
    F = rho * A + (1 - rho) * B
    dF = (1 - rho)[:, None] * dB
    dF[:, 0] += drho * (A - B) + rho * dA
    v = vbar(geom, x)
    gv = vbar_grad(geom, x)
    val = np.zeros((len(xp), 2))
    val[:, k] = F * (1 - v)
    grad = np.zeros((len(xp), 2, 2))
    grad[:, k, :] = (1 - v)[:, None] * dF - F[:, None] * gv
    return val, grad


def sample_grid(geom: GapGeometry, n_x=41, n_t=12, extent=1.0):
    """Tensor grid in ``(x', relative height)`` inside ``Omega_{extent*R}``.

    ``n_x`` is odd so the column ``x' = 0`` is included; heights sit at
    cell-centred fractions of the local gap width.
    """
    if n_x % 2 == 0:
        raise ContractError("n_x must be odd so that x'=0 is sampled")
    xp = np.linspace(-extent * geom.R, extent * geom.R, n_x)
    t = (np.arange(n_t) + 0.5) / n_t
    X, T = np.meshgrid(xp, t, indexing="ij")
    lo = geom.h(X)
    d = gap_delta(geom, X)
    pts = np.column_stack([X.ravel(), (lo + T * d).ravel()])
    return pts


def check_comparison_error(u_alpha, alpha: int, geom: GapGeometry, grid=None,
                           control=False) -> dict:
    """Max of ``sqrt(delta) |grad(u_alpha - tilde_u_alpha)|`` over the grid.

    With ``control=True`` the comparison field is dropped, which exposes
    the ``1/delta`` growth of the raw gradient.
    """
    pts = sample_grid(geom) if grid is None else np.asarray(grid)
    G = u_alpha.gradient(pts)
    if not control:
        G = G - tilde_u_alpha(geom, alpha, pts)[1]
    s = np.sqrt(gap_delta(geom, pts[:, 0])) * np.linalg.norm(G, axis=(1, 2))
    i = int(np.argmax(s))
    return {"alpha": alpha, "control": bool(control), "max": float(s[i]),
            "argmax": pts[i].tolist(), "finite": bool(np.all(np.isfinite(s)))}


def check_weighted_bounds(aux, geom: GapGeometry, grid=None, C0=None) -> dict:
    """Weighted gradient maxima of the auxiliary fields over the grid.

    Translations: ``|grad u_a| (eps + x'^2)``; rotation:
    ``|grad u_a| (eps + x'^2) / (eps + |x'|)``; outer-data field:
    ``(|grad u_0| - C0) (eps + x'^2) / |x'|`` off the centre column, with
    ``C0`` the max of ``|grad u_0|`` on the centre column unless given.
    """
    pts = sample_grid(geom) if grid is None else np.asarray(grid)
    xp = pts[:, 0]
    w = geom.eps + xp ** 2
    out = {}
    for k, u in enumerate(aux.u_alpha):
        g = u.gradient_norm(pts)
        if k < 2:
            out[f"u_{k + 1}"] = float(np.max(g * w))
        else:
            out[f"u_{k + 1}"] = float(np.max(g * w / (geom.eps + np.abs(xp))))
    g0 = aux.u_zero.gradient_norm(pts)
    centre = np.abs(xp) < 1e-14
    if C0 is None:
        C0 = float(g0[centre].max()) if np.any(centre) else 0.0
    off = ~centre
    out["u_0"] = float(np.max((g0[off] - C0) * w[off] / np.abs(xp[off]),
                              initial=0.0))
    out["C0"] = float(C0)
    out["finite"] = bool(all(np.isfinite(v) for v in out.values()
                             if isinstance(v, float)))
    return out
