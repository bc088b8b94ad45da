"""Kernel regression with local models implied by growth differential equations.

The main entry points are :func:`predict` / :func:`fit_curve` for the local
estimators, :func:`loocv_select` for bandwidths, :mod:`dekernel.asymptotics`
for leading-order bias and variance, :mod:`dekernel.simlab` for the Monte
Carlo comparison and :mod:`dekernel.tumor` for the tumour-volume analyses.
"""

from .bandwidth import BandwidthGrid, Selection, cv_score, default_grid, loocv_select, rot_bandwidth
from .errors import (
    DekernelError,
    DomainError,
    EstimationError,
    NonConvergence,
    QuadratureError,
    SelectionError,
    UndefinedAtPoint,
)
from .growth import (
    GrowthLaw,
    estimate_alpha,
    estimate_lambda_subexp,
    fit_nls_exponential,
    fit_subexp_solution,
    local_subexp_fit,
    loglinear_fit,
    subexp_solution,
)
from .kernels import EPANECHNIKOV, GAUSSIAN, Kernel, KernelMoments, ds_variance_constant, get_kernel, kernel_moments, kh_weight
from .localfit import Dataset, FitCurve, Method, de1k_fit, fit_curve, local_poly_fit, predict

__version__ = "0.1.0"

__all__ = [
    "BandwidthGrid",
    "Dataset",
    "DekernelError",
    "DomainError",
    "EPANECHNIKOV",
    "EstimationError",
    "FitCurve",
    "GAUSSIAN",
    "GrowthLaw",
    "Kernel",
    "KernelMoments",
    "Method",
    "NonConvergence",
    "QuadratureError",
    "Selection",
    "SelectionError",
    "UndefinedAtPoint",
    "cv_score",
    "de1k_fit",
    "default_grid",
    "ds_variance_constant",
    "estimate_alpha",
    "estimate_lambda_subexp",
    "fit_curve",
    "fit_nls_exponential",
    "fit_subexp_solution",
    "get_kernel",
    "kernel_moments",
    "kh_weight",
    "local_poly_fit",
    "local_subexp_fit",
    "loglinear_fit",
    "loocv_select",
    "predict",
    "rot_bandwidth",
    "subexp_solution",
]
