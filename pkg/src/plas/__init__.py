"""Adaptive sampling and policy learning for contextual best-arm identification.

A simulation library for fixed-budget experiments where the best treatment
arm depends on covariates: variance-adaptive arm assignment, doubly robust
policy-value estimation, exact policy training over finite classes, the
theoretical bound constants of the minimax analysis, and a reproducible
experiment harness with a CLI.
"""

from .model import (
    BanditModel,
    FiniteContexts,
    IndependentGaussianContexts,
    QuadrantScenario,
    SIGMA_PRESETS,
    constant_model,
)
from .policy import (
    CellPartition,
    EntropyIntegralBound,
    NatarajanDimension,
    PolicyClass,
    TabularPolicy,
    ThresholdPolicy,
    entropy_integral_bound,
    natarajan_dimension,
    optimal_policy_value,
    policy_from_dict,
    policy_value,
    simple_regret,
)
from .recommend import (
    AipwScoreTable,
    aipw_score,
    aipw_score_table,
    clip_outcome,
    empirical_policy_value,
    outcome_clip_level,
    recommend_arm,
    train_policy,
)
from .sampling import (
    AdaptiveSampler,
    Assignment,
    History,
    NoArmObservationsError,
    default_neighbor_count,
    draw_arm,
    knn_moment_estimates,
    target_ratio,
    variance_estimate,
)
from .strategies import (
    STRATEGIES,
    BaseStrategy,
    OracleStrategy,
    PlasStrategy,
    UniformStrategy,
    make_strategy,
)
from .theory import (
    BoundReport,
    bound_report,
    expected_log_likelihood_ratio,
    gaussian_kl,
    grid_search_allocation,
    lower_bound_constant,
    simulate_log_likelihood_ratio,
    solve_allocation,
    unconditional_variances,
    upper_bound_constant,
)
from .harness import (
    ExperimentConfig,
    TrialResult,
    regret_scaling_sweep,
    run_experiment,
    run_trial,
    scenario_bound_report,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # model
    "BanditModel",
    "FiniteContexts",
    "IndependentGaussianContexts",
    "QuadrantScenario",
    "SIGMA_PRESETS",
    "constant_model",
    # policy
    "CellPartition",
    "EntropyIntegralBound",
    "NatarajanDimension",
    "PolicyClass",
    "TabularPolicy",
    "ThresholdPolicy",
    "entropy_integral_bound",
    "natarajan_dimension",
    "optimal_policy_value",
    "policy_from_dict",
    "policy_value",
    "simple_regret",
    # recommend
    "AipwScoreTable",
    "aipw_score",
    "aipw_score_table",
    "clip_outcome",
    "empirical_policy_value",
    "outcome_clip_level",
    "recommend_arm",
    "train_policy",
    # sampling
    "AdaptiveSampler",
    "Assignment",
    "History",
    "NoArmObservationsError",
    "default_neighbor_count",
    "draw_arm",
    "knn_moment_estimates",
    "target_ratio",
    "variance_estimate",
    # strategies
    "STRATEGIES",
    "BaseStrategy",
    "OracleStrategy",
    "PlasStrategy",
    "UniformStrategy",
    "make_strategy",
    # theory
    "BoundReport",
    "bound_report",
    "expected_log_likelihood_ratio",
    "gaussian_kl",
    "grid_search_allocation",
    "lower_bound_constant",
    "simulate_log_likelihood_ratio",
    "solve_allocation",
    "unconditional_variances",
    "upper_bound_constant",
    # harness
    "ExperimentConfig",
    "TrialResult",
    "regret_scaling_sweep",
    "run_experiment",
    "run_trial",
    "scenario_bound_report",
]
