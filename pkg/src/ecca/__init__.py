"""Two-view exponential-family CCA.

Decomposes the natural-parameter matrices of two matched datasets into an
intercept, a correlated (joint) low-rank part and mutually orthogonal
view-specific (individual) parts, estimated by alternating block updates
with splitting solvers for the orthogonality constraints.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .families import Family, binomial, eval_b, gaussian, nll, saturated_theta
from .fit import FitOptions, FitTrace, fit_ecca, initialize, \
    rotate_correlated_scores
from .metrics import EvalReport, chordal_distance, relative_error
from .model import EccaModel, assemble_theta, constraint_residuals, \
    load_model, save_model
from .newton import NewtonOptions, RowProblem, newton_solve_row, update_loadings
from .rank import RankEstimate, epca_low_rank, estimate_joint_rank, \
    estimate_ranks, estimate_total_rank
from .simulate import SimScenario, SimTruth, setting_scenario, simulate
from .soc import SocOptions, SocTrace, soc_update_u, soc_update_z

__version__ = "0.1.0"

__all__ = [
    "Family", "gaussian", "binomial", "eval_b", "nll", "saturated_theta",
    "EccaModel", "assemble_theta", "constraint_residuals", "save_model",
    "load_model", "NewtonOptions", "RowProblem", "newton_solve_row",
    "update_loadings", "SocOptions", "SocTrace", "soc_update_z",
    "soc_update_u", "FitOptions", "FitTrace", "initialize", "fit_ecca",
    "rotate_correlated_scores", "RankEstimate", "epca_low_rank",
    "estimate_total_rank", "estimate_joint_rank", "estimate_ranks",
    "SimScenario", "SimTruth", "setting_scenario", "simulate",
    "EvalReport", "relative_error", "chordal_distance",
    "KERNEL_BACKEND", "__version__",
]
