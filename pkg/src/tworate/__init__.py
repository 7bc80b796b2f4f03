"""Two-rate self-adjusting (1+lambda) EA on OneMax.

Simulation engine with interchangeable delta/bitwise kernels, exact
fitness-distance transition oracles, Monte Carlo verifiers for the scheme's
one-generation probability claims, and a reproducible experiment harness.
"""

from .analysis import (
    DriftEstimate,
    MonteCarloEstimate,
    RegionBounds,
    SummaryStats,
    exact_drift,
    exact_next_distance_law,
    mc_all_worse,
    mc_fitness_gain,
    mc_rate_halving,
    mc_winner_origin,
    region_bounds,
    summarize,
    wilson_interval,
)
from .controllers import (
    ControllerSpec,
    ControllerState,
    FitnessDependentController,
    GenerationOutcome,
    SelfAdjustingController,
    StaticController,
    enumerate_update_outcomes,
    fitness_dependent_rate,
    make_controller,
    propose_rates,
    static_rate,
    two_rate_state,
    update_rate,
)
from .core import ConfigError, EAConfig, SearchPoint, onemax, random_search_point
from .engine import EAState, RunRecord, run_ea, run_generation, write_trajectory_csv
from .harness import (
    ExperimentSpec,
    ResultRow,
    SummaryRow,
    SweepResult,
    VerifyRow,
    derive_run_seed,
    emit_csv,
    emit_plot,
    run_sweep,
    spec_from_json,
    spec_to_json,
    verify_claim,
    verify_suite,
)
from .mutation import (
    ExactDistribution,
    MutationDelta,
    distance_distribution,
    exact_point_prob,
    exact_tail_prob,
    mutate,
    sample_delta,
    sample_delta_batch,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
