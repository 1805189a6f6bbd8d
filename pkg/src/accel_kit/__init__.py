"""Fixed-point acceleration toolkit.

Accelerators (Anderson mixing and the optimal-trial-vector family with
control, real, and adaptive residual handling), reference Krylov solvers for
cross-checking on linear problems, a benchmark problem suite, and a CLI
experiment harness that writes bit-stable CSV traces with rendered figures.
"""

from __future__ import annotations

from .accel import (
    ConvergenceDiagnostics,
    HistoryWindow,
    Method,
    SolveOptions,
    SolveReport,
    Status,
    TraceRecord,
    anderson_step,
    approx_inverse_jacobian,
    assumption_m_estimate,
    coefficient_history,
    cos_theta,
    crop_step,
    estimate_contraction,
    estimate_convergence_factors,
    solve,
)
from .bench import (
    ExperimentConfig,
    MethodSpec,
    compare_methods,
    load_config,
    parse_config,
    rfactor_sweep,
    run_experiment,
)
from .errors import (
    AccelKitError,
    ConfigError,
    DegenerateTrace,
    DimensionMismatch,
    InvalidSpec,
    NonFiniteInput,
    NotSymmetric,
    ParseError,
    SingularWindow,
    UnsupportedFormat,
    ZeroVector,
)
from .krylov_ref import KrylovStatus, KrylovTrace, cr_solve, gmres_solve, orthomin_solve
from .la_core import (
    MixingCoefficients,
    QrFactorization,
    alpha_to_gamma,
    gamma_to_alpha,
    qr_factor,
    solve_mixing,
    solve_unconstrained_ls,
)
from .problems import (
    DelayNepData,
    LinearOperator,
    Problem,
    build_problem,
    default_delay_nep_data,
    evaluate_map_damped,
    five_point_laplacian,
    load_matrix_market,
    nep_matrix,
    operator_from_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "AccelKitError",
    "ConfigError",
    "ConvergenceDiagnostics",
    "DegenerateTrace",
    "DelayNepData",
    "DimensionMismatch",
    "ExperimentConfig",
    "HistoryWindow",
    "InvalidSpec",
    "KrylovStatus",
    "KrylovTrace",
    "LinearOperator",
    "Method",
    "MethodSpec",
    "MixingCoefficients",
    "NonFiniteInput",
    "NotSymmetric",
    "ParseError",
    "Problem",
    "QrFactorization",
    "SingularWindow",
    "SolveOptions",
    "SolveReport",
    "Status",
    "TraceRecord",
    "UnsupportedFormat",
    "ZeroVector",
    "alpha_to_gamma",
    "anderson_step",
    "approx_inverse_jacobian",
    "assumption_m_estimate",
    "build_problem",
    "coefficient_history",
    "compare_methods",
    "cos_theta",
    "cr_solve",
    "crop_step",
    "default_delay_nep_data",
    "estimate_contraction",
    "estimate_convergence_factors",
    "evaluate_map_damped",
    "five_point_laplacian",
    "gamma_to_alpha",
    "gmres_solve",
    "load_config",
    "load_matrix_market",
    "nep_matrix",
    "operator_from_matrix",
    "orthomin_solve",
    "parse_config",
    "qr_factor",
    "rfactor_sweep",
    "run_experiment",
    "solve",
    "solve_mixing",
    "solve_unconstrained_ls",
]
