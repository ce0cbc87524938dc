"""Gradient blow-up near a rigid inclusion in a 2D elastic body.

Numerical laboratory for the Lamé system in ``D \\ closure(D1)`` with a
rigid inclusion ``D1`` at distance ``eps`` from the outer boundary: graded
meshes of the thin gap, P2 finite elements, the rigid-mode decomposition of
the solution, closed-form comparison fields and rate fits over eps sweeps.
"""
from .asymptotics import (RateFit, RateModel, SweepParams, SweepResult,
                          blow_up_predicate, estimate_bstar, fit_rate,
                          gamma_d, profile_check, rho_d, run_sweep,
                          solve_single)
from .config import RunConfig, load_config
from .decomposition import (AuxiliarySolutions, BlockSystem,
                            RigidCoefficients, assemble_block_system,
                            decompose, monolithic_solve, reconstruct,
                            solve_auxiliary, solve_coefficients)
from .errors import *  # noqa: F401,F403
from .fem import (DofMap, FemField, SPDSolver, apply_dirichlet,
                  assemble_stiffness, energy_product, solve_spd,
                  surface_traction, traction_functional)
from .geometry import (BoundaryData, Disk, GapGeometry, MaterialParams,
                       disk_configuration, elasticity_form, gap_width,
                       local_graphs, rigid_basis)
from .mesh import (INCLUSION, OUTER, BoundaryTag, GradingSpec, TriMesh,
                   build_gap_mesh, mesh_inclusion, refine_uniform,
                   segment_samples)

__version__ = "0.1.0"
