"""Matrix-free multigroup SN k-eigenvalue solvers with multigrid-in-energy preconditioning."""

from .data import CrossSectionSet, GroupStructure, Material, validate_xs
from .eigen import (DenseProblem, EigenConfig, EigenResult, IterationRecord, TransportProblem,
                    power_iteration, rayleigh_quotient, rqi, shifted_inverse_iteration)
from .fixtures import FixtureId, make_fixture
from .geometry import Boundary, BoundaryCondition, Mesh, Quadrature, build_quadrature
from .krylov import KrylovConfig, KrylovResult, gmres
from .mge import MgeConfig
from .multigroup import solve_block_krylov, solve_gauss_seidel
from .operators import TransportContext
from .problem import ProblemSpec, SolverConfig, dump_problem, load_problem, parse_problem

__version__ = "0.1.0"

__all__ = [
    "Boundary", "BoundaryCondition", "CrossSectionSet", "DenseProblem", "EigenConfig",
    "EigenResult", "FixtureId", "GroupStructure", "IterationRecord", "KrylovConfig",
    "KrylovResult", "Material", "Mesh", "MgeConfig", "ProblemSpec", "Quadrature",
    "SolverConfig", "TransportContext", "TransportProblem", "build_quadrature", "dump_problem",
    "gmres", "load_problem", "make_fixture", "parse_problem", "power_iteration",
    "rayleigh_quotient", "rqi", "shifted_inverse_iteration", "solve_block_krylov",
    "solve_gauss_seidel", "validate_xs",
]
