"""Covariance localization laboratory.

Tools for studying covariance estimation from small ensembles: a set of
benchmark covariance models on one-dimensional grids, reproducible
ensemble generation, Schur-product and shrinkage estimators with
elementwise bias and variance diagnostics, a quadratically penalized
precision estimator that interpolates between the sample covariance and
tapering, and sweep machinery that recovers how the tuned parameters
scale with ensemble size.
"""
from covloc.covmodels import (
    EPS_PSD,
    CovarianceModel,
    GridGeometry,
    KernelFamily,
    KernelSpec,
    ModelLabel,
    build_derivative_operator,
    build_multiscale,
    build_nonstationary,
    build_pressure_wind,
    build_single_scale,
    custom_model,
    distance_matrix,
    grid_distance,
    kernel_matrix,
    laplacian_grid_precision,
)
from covloc.ensembles import (
    EnsembleData,
    FactorizedModel,
    draw_ensemble,
    factorize,
    sample_covariance,
)
from covloc.errors import (
    ConfigError,
    CovlocError,
    FactorizationError,
    ModelValidityError,
    NonConvergenceError,
)
from covloc.estimators import (
    BiasVarianceReport,
    HybridSpec,
    InverseWishartSpec,
    LocalizationLayout,
    LocalizationMatrix,
    build_localization,
    elementwise_bias_variance,
    hybrid_estimate,
    iw_map_estimate,
    schur_estimate,
)
from covloc.matrixio import (
    load_matrix,
    load_matrix_csv,
    save_matrix,
    save_matrix_csv,
)
from covloc.qc import (
    PenaltyMatrix,
    QcAlgorithm,
    QcReport,
    QcSolveOptions,
    asymptotic_schur_localization,
    qc_gradient,
    qc_log_posterior,
    qc_map_estimate,
    theta_for_target_localization,
)
from covloc.sweeps import (
    EstimatorFamily,
    ExponentForm,
    ScalingFit,
    SuiteName,
    SweepConfig,
    SweepResult,
    benchmark_models,
    experiment_suite,
    fit_scaling,
    hybrid_prior,
    refine_length_sweep,
    relative_frobenius_error,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "EPS_PSD",
    "BiasVarianceReport",
    "ConfigError",
    "CovarianceModel",
    "CovlocError",
    "EnsembleData",
    "EstimatorFamily",
    "ExponentForm",
    "FactorizationError",
    "FactorizedModel",
    "GridGeometry",
    "HybridSpec",
    "InverseWishartSpec",
    "KernelFamily",
    "KernelSpec",
    "LocalizationLayout",
    "LocalizationMatrix",
    "ModelLabel",
    "ModelValidityError",
    "NonConvergenceError",
    "PenaltyMatrix",
    "QcAlgorithm",
    "QcReport",
    "QcSolveOptions",
    "ScalingFit",
    "SuiteName",
    "SweepConfig",
    "SweepResult",
    "asymptotic_schur_localization",
    "benchmark_models",
    "build_derivative_operator",
    "build_localization",
    "build_multiscale",
    "build_nonstationary",
    "build_pressure_wind",
    "build_single_scale",
    "custom_model",
    "distance_matrix",
    "draw_ensemble",
    "elementwise_bias_variance",
    "experiment_suite",
    "factorize",
    "fit_scaling",
    "grid_distance",
    "hybrid_estimate",
    "hybrid_prior",
    "iw_map_estimate",
    "kernel_matrix",
    "laplacian_grid_precision",
    "load_matrix",
    "load_matrix_csv",
    "qc_gradient",
    "qc_log_posterior",
    "qc_map_estimate",
    "refine_length_sweep",
    "relative_frobenius_error",
    "run_sweep",
    "sample_covariance",
    "save_matrix",
    "save_matrix_csv",
    "schur_estimate",
    "theta_for_target_localization",
]
