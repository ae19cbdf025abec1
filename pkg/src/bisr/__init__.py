"""Sparse deconvolution with a convexity-preserving bivariate penalty."""

from ._backend import NAME as backend
from .bivariate import BivariateParams, BivariatePenalty, Region
from .convexity import (EigenPair, TridiagBound, certified_params, fit_tridiag_bound,
                        max_params_bivariate, params_from_tridiag, separable_limit,
                        verify_nonconvexity)
from .diagnostics import objective_value, optimality_report, rmse
from .errors import (CertificateWarning, ConvexityError, DebiasWarning, DomainError,
                     SolverFailure)
from .linop import ConvolutionFilter
from .penalties import PenaltyFamily, SmoothedPenalty
from .solver import Algorithm, Objective, SolveResult, SolverConfig, solve, solve_fbs, solve_mm

__version__ = "0.1.0"

__all__ = [
    "Algorithm", "BivariateParams", "BivariatePenalty", "CertificateWarning",
    "ConvexityError", "ConvolutionFilter", "DebiasWarning", "DomainError", "EigenPair",
    "Objective", "PenaltyFamily", "Region", "SmoothedPenalty", "SolveResult",
    "SolverConfig", "SolverFailure", "TridiagBound", "backend", "certified_params",
    "fit_tridiag_bound", "max_params_bivariate", "objective_value", "optimality_report",
    "params_from_tridiag", "rmse", "separable_limit", "solve", "solve_fbs", "solve_mm",
    "verify_nonconvexity",
]
