"""Numerical tools for singular quasilinear Schrodinger problems via the dual variable."""

from .energy import EnergyBreakdown, energy, nehari_gap, residual
from .errors import (InvalidSpec, NoCompatibility, NoInteriorMinimum, NonConvergence,
                     NonPositiveField, NonPositiveT, QuasidualError)
from .fiber import FiberProfile, phi, phi_prime, project_to_nehari
from .grid import GridFunction, Mesh, first_eigenfunction, from_csv, to_csv
from .problem import (Constant, Cosine, CriticalType, PowerOfDistance, ProblemSpec, Sublinear,
                      Tabulated, classify_duality, compat_integral, load_spec,
                      manufactured_spec, parse_spec, validate)
from .solver import (SolveOptions, SolveReport, boundary_growth_check, primal_residual, solve,
                     sweep_lambda, uniqueness_probe)
from .transform import KERNEL, TransformKernel, verify_properties

__version__ = "0.1.0"

__all__ = [
    "Constant", "Cosine", "CriticalType", "EnergyBreakdown", "FiberProfile", "GridFunction",
    "InvalidSpec", "KERNEL", "Mesh", "NoCompatibility", "NoInteriorMinimum", "NonConvergence",
    "NonPositiveField", "NonPositiveT", "PowerOfDistance", "ProblemSpec", "QuasidualError",
    "SolveOptions", "SolveReport", "Sublinear", "Tabulated", "TransformKernel",
    "boundary_growth_check", "classify_duality", "compat_integral", "energy",
    "first_eigenfunction", "from_csv", "load_spec", "manufactured_spec", "nehari_gap",
    "parse_spec", "phi", "phi_prime", "primal_residual", "project_to_nehari", "residual",
    "solve", "sweep_lambda", "to_csv", "uniqueness_probe", "validate", "verify_properties",
]
