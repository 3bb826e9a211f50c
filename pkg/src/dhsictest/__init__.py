"""Kernel-based joint independence testing for vector and functional data.

The package measures joint dependence of d >= 2 components with the
d-variable Hilbert-Schmidt independence criterion (dHSIC), estimated from
per-component Gram matrices. Two decision procedures are provided: an
asymptotic z-test built on a weight-modified estimator whose null limit is
normal, and a permutation baseline built on the plain V-statistic. A
simulation module generates coupled cosine-series functional data and runs
seeded Monte Carlo size/power studies; the ``dhsictest`` CLI wraps CSV
ingestion, testing, studies and benchmarking.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    DegenerateSchemeError,
    DegenerateVarianceError,
    DhsicError,
    InvalidInputError,
    OracleSizeError,
    StudyReplicateError,
)
from .estimator import (
    CustomWeights,
    EstimateBundle,
    WeightScheme,
    alpha_hat_sq,
    dhsic_modified,
    dhsic_naive,
    dhsic_oracle,
    estimate,
    sigma_hat_sq,
    w_squared_limit,
    weight_at,
)
from .kernel import (
    ComponentData,
    FunctionalGrid,
    GramStack,
    KernelSpec,
    Sample,
    build_gram_stack,
    gaussian_gram,
    linear_gram,
    read_component_csv,
    squared_l2_distance_trapezoid,
    write_component_csv,
)
from .sim import (
    DEFAULT_STUDY_ETA_SQ,
    DEPENDENCE_FUNCTIONS,
    ModelConfig,
    StudyConfig,
    StudyReport,
    build_components,
    cosine_series,
    default_grid,
    dependence_function,
    draw_coefficients,
    generate_sample,
    load_study_config,
    null_distribution_probe,
    run_study,
)
from .testing import (
    TestResult,
    asymptotic_test,
    asymptotic_test_from_grams,
    normal_quantile,
    permutation_test,
    permutation_test_from_grams,
    permute_stack,
    two_sided_p,
)

__all__ = [
    "__version__",
    "ComponentData",
    "ConfigurationError",
    "CustomWeights",
    "DEFAULT_STUDY_ETA_SQ",
    "DEPENDENCE_FUNCTIONS",
    "DegenerateSchemeError",
    "DegenerateVarianceError",
    "DhsicError",
    "EstimateBundle",
    "FunctionalGrid",
    "GramStack",
    "InvalidInputError",
    "KernelSpec",
    "ModelConfig",
    "OracleSizeError",
    "Sample",
    "StudyConfig",
    "StudyReplicateError",
    "StudyReport",
    "TestResult",
    "WeightScheme",
    "alpha_hat_sq",
    "asymptotic_test",
    "asymptotic_test_from_grams",
    "build_components",
    "build_gram_stack",
    "cosine_series",
    "default_grid",
    "dependence_function",
    "dhsic_modified",
    "dhsic_naive",
    "dhsic_oracle",
    "draw_coefficients",
    "estimate",
    "gaussian_gram",
    "generate_sample",
    "linear_gram",
    "load_study_config",
    "normal_quantile",
    "null_distribution_probe",
    "permutation_test",
    "permutation_test_from_grams",
    "permute_stack",
    "read_component_csv",
    "run_study",
    "sigma_hat_sq",
    "squared_l2_distance_trapezoid",
    "two_sided_p",
    "w_squared_limit",
    "weight_at",
    "write_component_csv",
]
