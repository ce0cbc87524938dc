"""Run configuration: sectioned TOML files mapped onto plain dataclasses."""
from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .asymptotics import SweepParams
from .errors import ConfigError, ContractError
from .geometry import PHI_PRESETS, BoundaryData
from .mesh import GradingSpec

DEFAULT_EPS = (0.04, 0.02, 0.01, 0.005, 0.0025)


@dataclass
class GeometryConfig:
    preset: str = "disks"
    outer_radius: float = 1.0
    inclusion_radius: float = 0.3
    eps: float = 0.04


@dataclass
class MaterialConfig:
    lam: float = 1.0
    mu: float = 1.0


@dataclass
class DiscretizationConfig:
    n_layers: int = 8
    far_h: float = 0.1
    growth: float = 2.0
    min_angle: float = 15.0
    aspect: float = 2.5
    boundary_angle: float = 0.1
    refinements: int = 0


@dataclass
class BoundaryConfig:
    phi: str = "vertical_shear"
    value: list = field(default_factory=lambda: [1.0, 1.0])
    coefficients: list = field(default_factory=list)


@dataclass
class SweepConfig:
    eps: list = field(default_factory=lambda: list(DEFAULT_EPS))
    fit_points: int = 4
    segment_points: int = 32
    jobs: int = 1


@dataclass
class OutputConfig:
    directory: str = "results"
    formats: list = field(default_factory=lambda: ["json", "csv", "svg"])


SECTIONS = {"geometry": GeometryConfig, "material": MaterialConfig,
            "discretization": DiscretizationConfig,
            "boundary": BoundaryConfig, "sweep": SweepConfig,
            "output": OutputConfig}

FORMATS = ("json", "csv", "svg", "vtk")


@dataclass
class RunConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    material: MaterialConfig = field(default_factory=MaterialConfig)
    discretization: DiscretizationConfig = field(
        default_factory=DiscretizationConfig)
    boundary: BoundaryConfig = field(default_factory=BoundaryConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def __post_init__(self):
        self.validate()

    # -- validation -------------------------------------------------------
    def validate(self):
        g = self.geometry
        if g.preset != "disks":
            raise ConfigError(f"unknown geometry preset {g.preset!r}")
        if not 0 < g.inclusion_radius < g.outer_radius:
            raise ConfigError("need 0 < inclusion_radius < outer_radius")
        check_eps(g.eps)
        eps = [float(e) for e in self.sweep.eps]
        for e in eps:
            check_eps(e)
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("sweep eps list must be strictly decreasing")
        if self.sweep.fit_points < 3:
            raise ConfigError("fit_points must be at least 3")
        if self.sweep.jobs < 1:
            raise ConfigError("jobs must be positive")
        if self.boundary.phi not in PHI_PRESETS + ("custom",):
            raise ConfigError(f"unknown boundary preset {self.boundary.phi!r}")
        if self.boundary.phi == "custom" and not self.boundary.coefficients:
            raise ConfigError("custom boundary data needs coefficients")
        bad = set(self.output.formats) - set(FORMATS)
        if bad:
            raise ConfigError(f"unknown output formats {sorted(bad)}")
        if self.discretization.refinements < 0:
            raise ConfigError("refinements must be >= 0")
        try:
            self.grading()
            self.phi()
            from .geometry import MaterialParams
            MaterialParams(self.material.lam, self.material.mu)
        except ContractError as exc:
            raise ConfigError(str(exc)) from exc

    # -- derived objects --------------------------------------------------
    def grading(self) -> GradingSpec:
        d = self.discretization
        return GradingSpec(n_layers=int(d.n_layers), far_h=float(d.far_h),
                           growth=float(d.growth),
                           min_angle=float(d.min_angle),
                           aspect=float(d.aspect),
                           boundary_angle=float(d.boundary_angle))

    def phi(self) -> BoundaryData:
        b = self.boundary
        if b.phi == "custom":
            return BoundaryData.from_coefficients(b.coefficients)
        return BoundaryData.preset(b.phi, tuple(b.value))

    def sweep_params(self) -> SweepParams:
        return SweepParams(
            outer_radius=float(self.geometry.outer_radius),
            inclusion_radius=float(self.geometry.inclusion_radius),
            lam=float(self.material.lam), mu=float(self.material.mu),
            phi=self.phi(), grading=self.grading(),
            refinements=int(self.discretization.refinements),
            segment_points=int(self.sweep.segment_points))

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        unknown = set(data) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections {sorted(unknown)}")
        data = {k: dict(v) for k, v in data.items()}
        geo = data.get("geometry", {})
        if "eps_list" in geo:
            eps_list = geo.pop("eps_list")
            data.setdefault("sweep", {}).setdefault("eps", eps_list)
        if "lambda" in data.get("material", {}):
            data["material"]["lam"] = data["material"].pop("lambda")
        kwargs = {}
        for name, typ in SECTIONS.items():
            sec = data.get(name, {})
            known = {f.name for f in fields(typ)}
            extra = set(sec) - known
            if extra:
                raise ConfigError(
                    f"unknown keys in [{name}]: {sorted(extra)}")
            try:
                kwargs[name] = typ(**sec)
            except TypeError as exc:
                raise ConfigError(str(exc)) from exc
        return cls(**kwargs)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True,
                          separators=(",", ":"))

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


def check_eps(eps):
    try:
        e = float(eps)
    except (TypeError, ValueError):
        raise ConfigError(f"eps must be a number, got {eps!r}") from None
    if not 0 < e < 0.5:
        raise ConfigError(f"eps={e} outside (0, 1/2)")
    return e


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return RunConfig.from_dict(data)


def dumps_toml(cfg: RunConfig) -> str:
    """Minimal TOML writer for the flat sectioned layout used here."""
    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, (int, float)):
            return repr(v)
        if isinstance(v, str):
            return json.dumps(v)
        if isinstance(v, (list, tuple)):
            return "[" + ", ".join(fmt(x) for x in v) + "]"
        raise ConfigError(f"cannot serialize {v!r}")

    lines = []
    for name, sec in cfg.to_dict().items():
        lines.append(f"[{name}]")
        for k, v in sec.items():
            lines.append(f"{k} = {fmt(v)}")
        lines.append("")
    return "\n".join(lines)
