"""Two-body configuration, local graphs near the contact point, material
parameters, rigid displacements and boundary data.

All geometry is expressed in the canonical frame: the outer boundary point
closest to the inclusion is ``P = (0, 0)``, the inclusion point closest to
the outer boundary is ``P1 = (0, eps)`` and ``x_d`` (the last coordinate)
runs along the gap.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .errors import (ContractError, GeometryError, InvalidDimensionError,
                     OutOfWindowError)


# ---------------------------------------------------------------------------
# material

@dataclass(frozen=True)
class MaterialParams:
    """Isotropic Lame constants of the matrix phase.

    ``delta0`` is the ellipticity margin; when omitted the largest value
    compatible with ``delta0 <= mu, d*lam + 2*mu <= 1/delta0`` is used.
    """
    lam: float = 1.0
    mu: float = 1.0
    delta0: float | None = None
    dim: int = 2

    def __post_init__(self):
        bulk = self.dim * self.lam + 2.0 * self.mu
        if self.mu <= 0 or bulk <= 0:
            raise ContractError(
                f"Lame parameters not elliptic: mu={self.mu}, "
                f"d*lam+2mu={bulk}")
        best = min(self.mu, bulk, 1.0 / self.mu, 1.0 / bulk)
        if self.delta0 is None:
            object.__setattr__(self, "delta0", best)
        elif not 0 < self.delta0 <= best * (1 + 1e-12):
            raise ContractError(
                f"delta0={self.delta0} violates delta0 <= mu, d*lam+2mu <= "
                f"1/delta0 (largest admissible value {best:.6g})")

    @property
    def bulk(self):
        return self.dim * self.lam + 2.0 * self.mu

    def ellipticity_bounds(self):
        """Lower and upper constants of the quadratic form on symmetric
        matrices."""
        return min(2 * self.mu, self.bulk), max(2 * self.mu, self.bulk)

    def voigt(self):
        """Plane-strain constitutive matrix acting on (e11, e22, 2 e12)."""
        if self.dim != 2:
            raise InvalidDimensionError("Voigt matrix only provided for d=2")
        lam, mu = self.lam, self.mu
        return np.array([[lam + 2 * mu, lam, 0.0],
                         [lam, lam + 2 * mu, 0.0],
                         [0.0, 0.0, mu]])


def _check_symmetric(M, name):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ContractError(f"{name} must be a square matrix, got {M.shape}")
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    if np.abs(M - M.T).max(initial=0.0) > 1e-12 * scale:
        raise ContractError(f"{name} is not symmetric")
    return M


def elasticity_form(mat: MaterialParams, E, F) -> float:
    """Return ``(C E, F) = lam tr(E) tr(F) + 2 mu E:F`` for symmetric E, F."""
    E = _check_symmetric(E, "E")
    F = _check_symmetric(F, "F")
    if E.shape != F.shape:
        raise ContractError("E and F have different shapes")
    return float(mat.lam * np.trace(E) * np.trace(F)
                 + 2.0 * mat.mu * np.sum(E * F))


# ---------------------------------------------------------------------------
# rigid displacements

@dataclass(frozen=True)
class RigidField:
    """Rigid displacement ``x -> t + W x`` with W antisymmetric."""
    label: str
    translation: np.ndarray
    grad: np.ndarray

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.translation + x @ self.grad.T

    def strain(self, x=None):
        return 0.5 * (self.grad + self.grad.T)


@dataclass(frozen=True)
class RigidBasis:
    d: int
    psi: tuple

    def __len__(self):
        return len(self.psi)

    def __iter__(self):
        return iter(self.psi)

    def __getitem__(self, i):
        return self.psi[i]

    @property
    def n_translations(self):
        return self.d

    def values(self, x):
        """Array of shape (n_basis, n_points, d)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.stack([p(x) for p in self.psi])


def rigid_basis(d: int) -> RigidBasis:
    """Translations ``e_i`` followed by rotations ordered by (j, k), j < k.

    The rotation attached to (j, k) is ``x_k e_j - x_j e_k``, whose gradient
    has +1 in row j, column k; in the plane this is ``(x2, -x1)``.
    """
    if not isinstance(d, (int, np.integer)) or d < 2:
        raise InvalidDimensionError(f"rigid basis needs d >= 2, got {d!r}")
    psi = []
    zero = np.zeros((d, d))
    for i in range(d):
        t = np.zeros(d)
        t[i] = 1.0
        psi.append(RigidField(f"e{i + 1}", t, zero.copy()))
    for j, k in combinations(range(d), 2):
        W = np.zeros((d, d))
        W[j, k] = 1.0
        W[k, j] = -1.0
        psi.append(RigidField(f"rot{j + 1}{k + 1}", np.zeros(d), W))
    return RigidBasis(d, tuple(psi))


# ---------------------------------------------------------------------------
# bodies

@dataclass(frozen=True)
class Disk:
    center: tuple
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise GeometryError("disk radius must be positive")
        object.__setattr__(self, "center",
                           tuple(float(c) for c in self.center))

    @property
    def curvature(self):
        return 1.0 / self.radius

    @property
    def area(self):
        return np.pi * self.radius ** 2

    def project(self, points):
        """Closest points on the circle."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        c = np.asarray(self.center)
        v = p - c
        n = np.linalg.norm(v, axis=1, keepdims=True)
        if np.any(n == 0):
            raise GeometryError("cannot project the disk center")
        return c + self.radius * v / n

    def signed_distance(self, points):
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.linalg.norm(p - np.asarray(self.center), axis=1) - self.radius

    def contains(self, points, tol=0.0):
        return self.signed_distance(points) < -tol

    def lower_graph(self, xprime, order=0):
        """Lower arc relative to the lowest point: ``r - sqrt(r^2 - x'^2)``
        and its derivatives."""
        r = self.radius
        x = np.asarray(xprime, dtype=float)
        q = r * r - x * x
        if np.any(q <= 0):
            raise OutOfWindowError("lower graph evaluated outside the disk")
        s = np.sqrt(q)
        if order == 0:
            return r - s
        if order == 1:
            return x / s
        if order == 2:
            return r * r / (q * s)
        raise ValueError("order must be 0, 1 or 2")


# ---------------------------------------------------------------------------
# gap geometry

@dataclass(frozen=True)
class GapGeometry:
    """Outer disk D and inclusion D1 in the canonical frame."""
    outer: Disk
    inclusion: Disk
    eps: float
    R: float
    kappa0: float
    kappa1: float
    kappa2: float
    rotation: np.ndarray = field(default_factory=lambda: np.eye(2),
                                 compare=False, repr=False)
    translation: np.ndarray = field(default_factory=lambda: np.zeros(2),
                                    compare=False, repr=False)

    d = 2

    def h(self, xprime, order=0):
        """Graph of the outer boundary near P."""
        return self.outer.lower_graph(xprime, order)

    def h1(self, xprime, order=0):
        """Graph of the inclusion boundary near P1, shifted so that the
        inclusion boundary is ``x_d = eps + h1(x')``."""
        return self.inclusion.lower_graph(xprime, order)

    @property
    def P(self):
        return np.zeros(2)

    @property
    def P1(self):
        return np.array([0.0, self.eps])

    @property
    def area(self):
        return self.outer.area - self.inclusion.area

    def hessian_gap(self):
        return float(self.h1(0.0, 2) - self.h(0.0, 2))

    def to_canonical(self, points):
        """Map points given in the construction frame to the canonical one."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return (p - self.translation) @ self.rotation.T

    def describe(self):
        return {"outer_radius": self.outer.radius,
                "inclusion_radius": self.inclusion.radius,
                "eps": self.eps, "R": self.R, "kappa0": self.kappa0,
                "kappa1": self.kappa1, "kappa2": self.kappa2}


def _window_radius(outer: Disk, inclusion: Disk):
    # 2R must stay inside the single-valued range of both lower graphs
    single_valued = 0.49 * min(outer.radius, inclusion.radius)
    return min(0.4 * inclusion.radius, single_valued)


def local_graphs(outer: Disk, inclusion: Disk, eps: float) -> GapGeometry:
    """Normalize two disks to the canonical frame and build the gap graphs.

    The disks may be given anywhere; their gap must equal ``eps``.
    """
    if not eps > 0:
        raise GeometryError(f"gap distance must be positive, got {eps}")
    co = np.asarray(outer.center)
    ci = np.asarray(inclusion.center)
    sep = np.linalg.norm(ci - co)
    gap = outer.radius - sep - inclusion.radius
    scale = outer.radius
    if gap <= 0:
        raise GeometryError("inclusion closure is not inside the outer body")
    if abs(gap - eps) > 1e-12 * scale + 1e-14:
        raise GeometryError(
            f"bodies have gap {gap:.16g}, which differs from eps={eps:.16g}")
    if sep == 0:
        raise GeometryError("concentric bodies have no unique contact point")
    u = (ci - co) / sep
    P = co + outer.radius * u
    # rotate so that -u (from P towards P1) becomes +e2
    n = -u
    rot = np.array([[n[1], -n[0]], [n[0], n[1]]])
    R_o, r = outer.radius, inclusion.radius
    canon_outer = Disk((0.0, R_o), R_o)
    canon_incl = Disk((0.0, eps + r), r)

    kappa0 = min(canon_outer.curvature, canon_incl.curvature)
    kappa1 = canon_incl.curvature - canon_outer.curvature
    if kappa0 <= 0:
        raise GeometryError("curvature bound kappa0 must be positive")
    if kappa1 <= 0:
        raise GeometryError(
            "relative convexity fails: Hessian of h1 - h at 0 is not "
            "positive definite")
    R = _window_radius(canon_outer, canon_incl)
    if R <= 0:
        raise GeometryError("graph window collapsed")
    xs = np.linspace(-2 * R, 2 * R, 401)
    h = canon_outer.lower_graph(xs)
    h1 = canon_incl.lower_graph(xs)
    if np.any(eps + h1 - h <= 0):
        raise GeometryError("inclusion graph does not stay above outer graph")
    kappa2 = 0.0
    for body in (canon_outer, canon_incl):
        kappa2 += max(np.abs(body.lower_graph(xs, k)).max() for k in range(3))
    return GapGeometry(canon_outer, canon_incl, float(eps), float(R),
                       float(kappa0), float(kappa1), float(kappa2),
                       rotation=rot, translation=P)


def disk_configuration(outer_radius=1.0, inclusion_radius=0.3,
                       eps=0.04) -> GapGeometry:
    """Outer disk centred at (0, R) and inclusion on the same axis."""
    if inclusion_radius >= outer_radius:
        raise GeometryError("inclusion must be smaller than the outer body")
    outer = Disk((0.0, outer_radius), outer_radius)
    incl = Disk((0.0, eps + inclusion_radius), inclusion_radius)
    return local_graphs(outer, incl, eps)


def gap_width(geom: GapGeometry, xprime):
    """``eps + h1(x') - h(x')`` for ``|x'| <= R``."""
    x = np.asarray(xprime, dtype=float)
    if np.any(np.abs(x) > geom.R * (1 + 1e-12)):
        raise OutOfWindowError(
            f"|x'| exceeds the window radius R={geom.R:.4g}")
    return geom.eps + geom.h1(x) - geom.h(x)


# ---------------------------------------------------------------------------
# boundary data

Monomials = Mapping[tuple, float]


@dataclass(frozen=True)
class BoundaryData:
    """Polynomial boundary displacement ``phi``, one monomial table per
    component: ``{(p, q): c}`` stands for ``c * x1**p * x2**q``."""
    components: tuple
    name: str = "custom"

    def __post_init__(self):
        comps = []
        for comp in self.components:
            terms = {}
            for key, c in dict(comp).items():
                p, q = (int(k) for k in key)
                if p < 0 or q < 0:
                    raise ContractError("negative exponent in boundary data")
                terms[(p, q)] = terms.get((p, q), 0.0) + float(c)
            comps.append(terms)
        if len(comps) != 2:
            raise ContractError("boundary data must have 2 components")
        object.__setattr__(self, "components", tuple(comps))

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros((x.shape[0], 2))
        for l, terms in enumerate(self.components):
            for (p, q), c in terms.items():
                out[:, l] += c * x[:, 0] ** p * x[:, 1] ** q
        return out

    def grad(self, x):
        """Array (n, 2, 2) with ``[i, l, k] = d phi^l / d x_k``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.zeros((x.shape[0], 2, 2))
        for l, terms in enumerate(self.components):
            for (p, q), c in terms.items():
                if p:
                    out[:, l, 0] += c * p * x[:, 0] ** (p - 1) * x[:, 1] ** q
                if q:
                    out[:, l, 1] += c * q * x[:, 0] ** p * x[:, 1] ** (q - 1)
        return out

    def scaled(self, s):
        return BoundaryData(tuple({k: s * c for k, c in comp.items()}
                                  for comp in self.components),
                            name=f"{self.name}*{s:g}")

    @property
    def phi_at_P(self):
        return self(np.zeros((1, 2)))[0]

    @property
    def grad_at_P(self):
        """Tangential gradient at P, shape (d, d-1)."""
        return self.grad(np.zeros((1, 2)))[0][:, :1]

    def c2_norm(self, points):
        """Sup of value, gradient and Hessian entries over given points
        (Hessian estimated from the polynomial degree)."""
        v = np.abs(self(points)).max()
        g = np.abs(self.grad(points)).max()
        hess = 0.0
        for terms in self.components:
            for (p, q), c in terms.items():
                if p + q >= 2:
                    hess = max(hess, abs(c) * (p + q) * (p + q - 1))
        return float(max(v, g, hess))

    def to_dict(self):
        return {"name": self.name,
                "coefficients": [[[p, q, c] for (p, q), c in
                                  sorted(comp.items())]
                                 for comp in self.components]}

    @classmethod
    def from_coefficients(cls, coeffs: Sequence, name="custom"):
        comps = []
        for comp in coeffs:
            comps.append({(int(p), int(q)): float(c) for p, q, c in comp})
        return cls(tuple(comps), name=name)

    @classmethod
    def preset(cls, name: str, value=(1.0, 1.0)):
        if name == "vertical_shear":
            return cls(({}, {(0, 1): 1.0}), name=name)
        if name == "horizontal_shift":
            return cls(({(1, 0): 1.0}, {}), name=name)
        if name == "rotation":
            return cls(({(0, 1): 1.0}, {(1, 0): -1.0}), name=name)
        if name == "constant":
            c1, c2 = value
            return cls(({(0, 0): float(c1)}, {(0, 0): float(c2)}), name=name)
        raise ContractError(f"unknown boundary preset {name!r}")


PHI_PRESETS = ("vertical_shear", "horizontal_shift", "rotation", "constant")
