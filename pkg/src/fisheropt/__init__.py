"""Budget-constrained measurement selection by Fisher-information criteria.

Given a catalog of candidate sensors (bought once, whole time series) and
manual samples (paid per time point), this package precomputes each
selection's contribution to the Fisher information matrix and solves the
resulting mixed-integer programs: trace maximization as a MILP by branch
and bound, log-determinant maximization as a convex MINLP by outer
approximation, plus both continuous relaxations. Budget sweeps trace the
Pareto front between spend and information.
"""

from .catalog import (
    ErrorCovariance,
    ItemIndex,
    Measurement,
    MeasurementCatalog,
    assemble_covariance,
    build_item_index,
    build_row_layout,
    item_cost_vector,
    load_catalog,
    stack_sensitivities,
)
from .doptsolve import FwConfig, OaConfig, logdet_gradient_x, solve_minlp_dopt, solve_relaxed_dopt
from .errors import FisheroptError
from .fimatoms import FimAtoms, FimValue, build_atoms, eval_fim, invert_covariance
from .milp import BnbConfig, enumerate_bruteforce, solve_milp, solve_relaxed_trace, trace_cost_vector
from .moproblem import (
    A_OPT,
    D_OPT,
    MoProblem,
    Solution,
    build_problem,
    check_solution,
    problem_size,
)
from .sensmodel import (
    KineticsConfig,
    Manifest,
    SensitivityMatrix,
    ingest_sensitivities,
    kinetics_sensitivities,
    simulate_kinetics,
)
from .symmat import eig_sym, grad_logdet_lower, logdet, pinv_sym, solve_spd

__version__ = "0.1.0"

__all__ = [
    "A_OPT",
    "D_OPT",
    "BnbConfig",
    "ErrorCovariance",
    "FimAtoms",
    "FimValue",
    "FisheroptError",
    "FwConfig",
    "ItemIndex",
    "KineticsConfig",
    "Manifest",
    "Measurement",
    "MeasurementCatalog",
    "MoProblem",
    "OaConfig",
    "SensitivityMatrix",
    "Solution",
    "assemble_covariance",
    "build_atoms",
    "build_item_index",
    "build_problem",
    "build_row_layout",
    "check_solution",
    "enumerate_bruteforce",
    "eig_sym",
    "eval_fim",
    "grad_logdet_lower",
    "ingest_sensitivities",
    "invert_covariance",
    "item_cost_vector",
    "kinetics_sensitivities",
    "load_catalog",
    "logdet",
    "logdet_gradient_x",
    "pinv_sym",
    "problem_size",
    "simulate_kinetics",
    "solve_milp",
    "solve_minlp_dopt",
    "solve_relaxed_dopt",
    "solve_relaxed_trace",
    "solve_spd",
    "stack_sensitivities",
    "trace_cost_vector",
]
