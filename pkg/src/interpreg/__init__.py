"""Interpretability-regularized kernel regression and numerical checks of its error bounds."""

from .bounds import (
    BoundInputs,
    EquilibriumResult,
    covering_number_ball,
    effective_dimension,
    equilibrium_constants,
    invert_bound_for_epsilon,
    monte_carlo_validate_bound,
    sample_error_confidence,
)
from .core import (
    ConfigError,
    Dataset,
    EvaluationError,
    InputMeasure,
    PriorModel,
    QuadratureNodes,
    SyntheticTask,
    quadrature_nodes,
    sample_dataset,
    task_from_config,
)
from .interp_metric import MetricReport, empirical_metric, population_metric
from .kernel import Hypothesis, KernelSpec, gram_matrix, parse_kernel, rkhs_norm_sq
from .operator_lab import SpectralInstance, SpectralReport, closed_form_minimizer, verify_instance
from .solver import (
    DecompositionReport,
    FitConfig,
    FitResult,
    class_minimizer,
    decompose_fit,
    error_decomposition,
    fit_interpretable,
    fit_tikhonov,
    objective_gradient,
    objective_value,
)

__version__ = "0.1.0"
