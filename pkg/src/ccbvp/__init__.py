"""Nodal, threshold and dead-core solutions of -v'' = lam|v|^(q-2)v + |v|^(p-2)v on (0, 1).

Time-map analysis, shooting, continuation and a-priori checks for
concave-convex nonlinearities (1 < q < 2 < p) with Dirichlet data.
"""
__version__ = "0.1.0"

from ._backend import COMPILED, backend_name
from .apriori import (ConstantsTable, Report, build_constants, check_lemma_I, check_lemma_II,
                      check_ratio_inequalities)
from .continuation import Branch, BranchPoint, StepConfig, bifurcation_diagram, trace_branch
from .errors import (BranchUnavailable, CCBVPError, ConfigError, DeadCoreRegime, DomainError,
                     Escaped, NoSolution)
from .params import (Exponents, NonlinearitySpec, ParamPoint, PinchingBounds, G_eval, c_lambda,
                     energy, g_eval)
from .radial import AnnulusGeometry, pullback_solution, transform_nonlinearity
from .shooting import find_j_nodal, shoot
from .solutions import (DeadCorePlacement, PiecewiseSolution, build_dead_core, build_nodal,
                        build_threshold, classify, grid_residual)
from .timemap import (LOWER, UPPER, Lambda_j, alpha_star, dead_core_length, invert_time_map,
                      lambda_j_star, time_map)

__all__ = [
    "COMPILED", "backend_name", "ConstantsTable", "Report", "build_constants", "check_lemma_I",
    "check_lemma_II", "check_ratio_inequalities", "Branch", "BranchPoint", "StepConfig",
    "bifurcation_diagram", "trace_branch", "BranchUnavailable", "CCBVPError", "ConfigError",
    "DeadCoreRegime", "DomainError", "Escaped", "NoSolution", "Exponents", "NonlinearitySpec",
    "ParamPoint", "PinchingBounds", "G_eval", "c_lambda", "energy", "g_eval", "AnnulusGeometry",
    "pullback_solution", "transform_nonlinearity", "find_j_nodal", "shoot", "DeadCorePlacement",
    "PiecewiseSolution", "build_dead_core", "build_nodal", "build_threshold", "classify",
    "grid_residual", "LOWER", "UPPER", "Lambda_j", "alpha_star", "dead_core_length",
    "invert_time_map", "lambda_j_star", "time_map",
]
