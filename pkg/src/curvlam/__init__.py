"""Kepler and Hooke problems on constant-curvature planes, Appell's central
projection between them, and numerical verification that elapsed time and
both action integrals are invariant along Lambert paths."""

from .errors import (ConvergenceError, CurvlamError, DomainError,
                     SingularityError, UnreachableEnergyError)
from .geometry import Space
from .systems import Problem, State, SystemSpec
from .integrate import Arc, Tolerances, endpoint_jacobian, propagate, write_csv
from .appell import ProjectionMap, project_state, reparametrized_time, verify_projection
from .lambert import (EndPair, InvariantPair, LambertVector,
                      arcs_through_flat_kepler, invariant_pair, lambert_defect,
                      lambert_flow, lambert_vector, trivial_lambert_vector)
from .bvp import BvpProblem, BvpSolution, initial_speed, solve_arc, sweep_family
from .cli import ExperimentConfig, Report, run_theorem_check

__version__ = "0.1.0"

__all__ = [
    "Arc", "BvpProblem", "BvpSolution", "ConvergenceError", "CurvlamError",
    "DomainError", "EndPair", "ExperimentConfig", "InvariantPair",
    "LambertVector", "Problem", "ProjectionMap", "Report", "SingularityError",
    "Space", "State", "SystemSpec", "Tolerances", "UnreachableEnergyError",
    "arcs_through_flat_kepler", "endpoint_jacobian", "initial_speed",
    "invariant_pair", "lambert_defect", "lambert_flow", "lambert_vector",
    "project_state", "propagate", "reparametrized_time", "run_theorem_check",
    "solve_arc", "sweep_family", "trivial_lambert_vector", "verify_projection",
    "write_csv",
]
