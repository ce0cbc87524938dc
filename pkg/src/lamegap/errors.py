"""Exception hierarchy shared by all lamegap modules."""


class LamegapError(Exception):
    """Base class for every error raised by this package."""


class InvalidDimensionError(LamegapError, ValueError):
    pass


class ContractError(LamegapError, ValueError):
    """An argument violates a documented precondition."""


class GeometryError(LamegapError, ValueError):
    pass


class OutOfWindowError(GeometryError):
    """A point lies outside the local graph window around the contact point."""


class MeshQualityError(LamegapError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class AssemblyError(LamegapError):
    pass


class SolverError(LamegapError):
    def __init__(self, message, residual=None, problem=None):
        super().__init__(message)
        self.residual = residual
        self.problem = problem


class LocationError(LamegapError):
    """A query point is not covered by any mesh cell."""


class ConfigError(LamegapError, ValueError):
    pass
