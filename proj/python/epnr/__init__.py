"""Post-disaster electric power network recovery planning with rollout."""

from ._core import (
    ConfigError,
    ContractViolation,
    DamageScenario,
    EpisodeTrace,
    Network,
    Objective,
    ParseError,
    SelectorConfig,
    SelectorKind,
    build_synthetic_network,
    cumulative_moving_average,
    desk_network,
    gilroy_like_network,
    horizon_error_bound,
    main,
    min_norm_least_squares,
    numerical_rank,
    run_batch,
    run_recovery,
    sample_scenario,
    sequential_assignment,
    ucb1_select,
    unit_count,
)

__all__ = [
    "ConfigError",
    "ContractViolation",
    "DamageScenario",
    "EpisodeTrace",
    "Network",
    "Objective",
    "ParseError",
    "SelectorConfig",
    "SelectorKind",
    "build_synthetic_network",
    "cumulative_moving_average",
    "desk_network",
    "gilroy_like_network",
    "horizon_error_bound",
    "main",
    "min_norm_least_squares",
    "numerical_rank",
    "run_batch",
    "run_recovery",
    "sample_scenario",
    "sequential_assignment",
    "ucb1_select",
    "unit_count",
]
