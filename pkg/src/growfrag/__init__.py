"""Growth-fragmentation steady states and division-rate reconstruction.

A size-structured population grows at speed ``c * g(x)`` and splits at rate
``B(x)`` into daughters distributed by a kernel with unit mass and mean half
the mother size.  The package computes the steady eigenpair (normalized
profile and Malthus growth rate) by explicit time splitting, simulates noisy
measurements of that profile, and reconstructs the division rate from them
by an unregularized baseline, a stabilized derivative term, or spectral
filtering, together with the moment certificates that control when the
underlying operator equation is well posed.
"""
from ._backend import USE_NUMBA, backend_name
from ._version import __version__
from .coercivity import (
    CoercivityReport,
    certify_coercivity,
    col_moment_sup,
    quadratic_form_ratio,
    row_moment_sup,
)
from .direct import (
    EigenPair,
    IdentityReport,
    advection_step,
    cfl_dt,
    check_eigen_identities,
    fragmentation_step,
    solve_steady,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DegenerateMeasurementError,
    GrowFragError,
    IllConditionedSystemError,
    SingularSystemError,
)
from .harness import (
    GoldenSummary,
    SweepReport,
    SweepRow,
    combine_sweeps,
    golden_config,
    golden_ids,
    relative_l2_error,
    run_golden_suite,
    sweep_alpha,
)
from .inverse import (
    ReconstructionConfig,
    ReconstructionResult,
    back_substitute,
    estimate_speed,
    estimate_speed_mollified,
    reconstruct,
    reconstruct_brute,
    reconstruct_filtering,
    reconstruct_quasirev,
    recover_division,
)
from .measure import Measurement, MollifiedPair, add_noise, mollify
from .model import (
    Grid,
    GridFunction,
    KernelMatrix,
    ProblemConfig,
    RateSpec,
    build_grid,
    build_kernel,
    grid_function,
    initial_profile,
    load_config,
    quadrature,
)

__all__ = [
    "__version__", "USE_NUMBA", "backend_name",
    "Grid", "GridFunction", "RateSpec", "KernelMatrix", "ProblemConfig",
    "build_grid", "build_kernel", "grid_function", "initial_profile",
    "load_config", "quadrature",
    "CoercivityReport", "certify_coercivity", "row_moment_sup",
    "col_moment_sup", "quadratic_form_ratio",
    "EigenPair", "IdentityReport", "cfl_dt", "advection_step",
    "fragmentation_step", "solve_steady", "check_eigen_identities",
    "Measurement", "MollifiedPair", "add_noise", "mollify",
    "ReconstructionConfig", "ReconstructionResult", "back_substitute",
    "estimate_speed", "estimate_speed_mollified", "reconstruct",
    "reconstruct_brute", "reconstruct_quasirev", "reconstruct_filtering",
    "recover_division",
    "SweepRow", "SweepReport", "GoldenSummary", "sweep_alpha",
    "combine_sweeps", "relative_l2_error", "run_golden_suite",
    "golden_config", "golden_ids",
    "GrowFragError", "ConvergenceError", "SingularSystemError",
    "IllConditionedSystemError", "DegenerateMeasurementError", "ConfigError",
]
