"""Kriging-based Efficient Global Optimization in three variants.

A small research library: isotropic Matern 5/2 kriging surrogates, Expected
Improvement maximization, the classical ML-tuned EGO loop, a greedy
length-scale-sweep oracle, a small-ensemble-of-models EGO, and a seeded
benchmark harness with a CSV-emitting CLI.
"""

from .acquisition import AcquisitionProblem, ei_value, expected_improvement, maximize_ei
from .bench import (
    ConfigError,
    RunConfig,
    aggregate_directory,
    emit_sweep_trace,
    main,
    run_benchmark,
)
from .design import (
    BENCHMARK_NAMES,
    BenchmarkFunction,
    BoxDomain,
    evaluate_benchmark,
    lhs,
    make_benchmark,
    min_distance,
    sample_lengthscales,
)
from .kriging import (
    DesignOfExperiments,
    IllConditionedModelError,
    Kernel,
    KrigingModel,
    concentrated_log_likelihood,
    correlation_matrix,
    estimate_theta_ml,
    fit,
    matern52,
    predict,
)
from .optimizers import (
    ConvergenceRecord,
    LoopConfig,
    RadiusSchedule,
    SweepTrace,
    densify_lengthscales,
    initial_radius,
    radius,
    run_ego,
    run_ensemble_ego,
    run_greedy_sweep,
    select_candidates,
)

__version__ = "0.1.0"

__all__ = [
    "AcquisitionProblem",
    "BENCHMARK_NAMES",
    "BenchmarkFunction",
    "BoxDomain",
    "ConfigError",
    "ConvergenceRecord",
    "DesignOfExperiments",
    "IllConditionedModelError",
    "Kernel",
    "KrigingModel",
    "LoopConfig",
    "RadiusSchedule",
    "RunConfig",
    "SweepTrace",
    "aggregate_directory",
    "concentrated_log_likelihood",
    "correlation_matrix",
    "densify_lengthscales",
    "ei_value",
    "emit_sweep_trace",
    "estimate_theta_ml",
    "evaluate_benchmark",
    "expected_improvement",
    "fit",
    "initial_radius",
    "lhs",
    "main",
    "make_benchmark",
    "matern52",
    "maximize_ei",
    "min_distance",
    "predict",
    "radius",
    "run_benchmark",
    "run_ego",
    "run_ensemble_ego",
    "run_greedy_sweep",
    "sample_lengthscales",
    "select_candidates",
]
