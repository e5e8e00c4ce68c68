"""qvar: strong q-variation norms, ergodic averages and analytic-semigroup
diagnostics on finite weighted L^p models."""

from .errors import (
    DegeneracyError,
    DivergenceError,
    InputError,
    NumericError,
    ParameterError,
    PreconditionError,
    QvarError,
)
from .variation import (
    dyadic_vq_profile,
    jump_count,
    jump_count_bruteforce,
    oscillation_norm,
    vq_norm,
    vq_norm_bruteforce,
)
from .lp_model import (
    MatrixOperator,
    MeasureSpace,
    NormEstimate,
    bochner_oscillation_norm,
    bochner_variation_norm,
    difference_operator,
    ergodic_average,
    lp_norm,
    mean_ergodic_projection,
    modulus_operator,
    operator_pnorm,
    regular_norm,
)
from .analyticity import (
    AnalyticityReport,
    StolzParams,
    analyze,
    convolution_criterion,
    diff_profile,
    in_stolz_domain,
    normal_spectral_diff_formula,
    numerical_range_check,
    ritt_resolvent_sup,
    stolz_spectrum_check,
)
from .semigroups import (
    AnalyticProfile,
    GeneratorModel,
    SubordinationSpec,
    analytic_profile,
    continuous_average,
    default_time_grid,
    derivative_family,
    evolve,
    fractional_generator,
    subordinate,
    subordinate_with_details,
)
from .experiments import (
    ExperimentConfig,
    FamilySpec,
    Report,
    build_operator,
    empirical_constant,
    pointwise_convergence,
    q_sweep,
    square_function,
    square_function_spectral_p2,
    telescoping_check,
    transference_check_p2,
)

__version__ = "0.1.0"

__all__ = [
    "QvarError",
    "InputError",
    "ParameterError",
    "PreconditionError",
    "NumericError",
    "DegeneracyError",
    "DivergenceError",
    "vq_norm",
    "vq_norm_bruteforce",
    "oscillation_norm",
    "jump_count",
    "jump_count_bruteforce",
    "dyadic_vq_profile",
    "MeasureSpace",
    "MatrixOperator",
    "NormEstimate",
    "lp_norm",
    "bochner_variation_norm",
    "bochner_oscillation_norm",
    "operator_pnorm",
    "modulus_operator",
    "regular_norm",
    "ergodic_average",
    "difference_operator",
    "mean_ergodic_projection",
    "__version__",
]
