"""Integrating-factor midpoint time stepping with computable error bounds."""

from .bench import (
    DEFAULT_THETA,
    PROBLEM_IDS,
    AdaptiveResult,
    DiscreteSystem,
    ProblemSpec,
    UniformResult,
    backend_for,
    build_problem,
    convergence_order,
    dirichlet_laplacian,
    run_adaptive,
    run_uniform,
)
from .control import (
    AdaptiveConfig,
    AdaptiveTrace,
    Rejection,
    StepControlError,
    adapt_solve,
    growth_rule,
)
from .estimate import (
    EstimatorBreakdown,
    build_breakdown,
    effectivity_index,
    gauss3_integrate,
    interval_contribution,
    local_estimator,
    optimal_bound,
    suboptimal_estimate,
)
from .linops import (
    DensePadeBackend,
    EigenBasis,
    ExpBackend,
    SpdOperator,
    SpectralBackend,
    StateVector,
    apply_block,
    energy_inner,
    energy_norm,
    forcing_state,
    make_backend,
    spd_from_dense,
    zero_state,
)
from .reconstruct import (
    ReconstructionPieces,
    estimator_integrand,
    forcing_integral,
    forcing_interpolant,
    make_pieces,
    reconstruction_eval,
    reconstruction_gap,
)
from .stepper import (
    IntervalRecord,
    if_step,
    interpolant_eval,
    make_interval,
    residual,
    suboptimal_bound,
)

__all__ = [name for name in dir() if not name.startswith("_")]
