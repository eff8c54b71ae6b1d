"""Out-of-variable zero-shot transfer: learn the partial derivative of the
hidden generating mechanism from source-residual third moments and predict
the outcome in an environment that never observed it."""

from . import baselines, core, errors, harness, moments, regressor, scm, theory
from .core import (
    CompositionPredictor,
    DerivativeModel,
    ZeroShotPredictor,
    build_predictor,
    compose_possibility,
    fit_bivariate_derivatives,
    fit_parametric_poly,
    fit_second_order,
    fit_skew_derivative,
    recover_target_coefficients,
    zero_shot_predict,
)
from .harness import EvaluationReport, ExperimentConfig, percentage_loss, run_benchmark
from .moments import MomentSummary, central_moments, gaussian_noise_moment, residual_powers
from .regressor import FeedforwardRegressor, LossSpec, TrainConfig, gradient_check, train
from .scm import (
    EnvironmentDataset,
    GeneratingFunction,
    PolyPredictor,
    ScmConfig,
    StandardizationTransform,
    analytic_source_predictor,
    analytic_target_predictor,
    eval_function,
    project_environment,
    sample_joint,
)

__all__ = [
    "CompositionPredictor",
    "DerivativeModel",
    "EnvironmentDataset",
    "EvaluationReport",
    "ExperimentConfig",
    "FeedforwardRegressor",
    "GeneratingFunction",
    "LossSpec",
    "MomentSummary",
    "PolyPredictor",
    "ScmConfig",
    "StandardizationTransform",
    "TrainConfig",
    "ZeroShotPredictor",
    "analytic_source_predictor",
    "analytic_target_predictor",
    "baselines",
    "build_predictor",
    "central_moments",
    "compose_possibility",
    "core",
    "errors",
    "eval_function",
    "fit_bivariate_derivatives",
    "fit_parametric_poly",
    "fit_second_order",
    "fit_skew_derivative",
    "gaussian_noise_moment",
    "gradient_check",
    "harness",
    "moments",
    "percentage_loss",
    "project_environment",
    "recover_target_coefficients",
    "regressor",
    "residual_powers",
    "run_benchmark",
    "sample_joint",
    "scm",
    "theory",
    "train",
    "zero_shot_predict",
]
